#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "grpca/metrics.hpp"

using namespace grpca;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::Io;
}

// Exhaustive optimum over all matchings of size min(a, b).
double brute_force(const Matrix& sim) {
  const bool flip = sim.rows() > sim.cols();
  const Matrix s = flip ? Matrix(sim.transpose()) : sim;  // rows <= cols
  std::vector<int> cols(static_cast<std::size_t>(s.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = -1e300;
  do {
    double t = 0.0;
    for (Index i = 0; i < s.rows(); ++i) t += s(i, cols[static_cast<std::size_t>(i)]);
    best = std::max(best, t);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

double total(const std::vector<MatchedPair>& m) {
  double t = 0.0;
  for (const auto& p : m) t += p.similarity;
  return t;
}

bool is_matching(const std::vector<MatchedPair>& m, Index a, Index b) {
  std::vector<bool> ri(static_cast<std::size_t>(a)), ci(static_cast<std::size_t>(b));
  if (static_cast<Index>(m.size()) != std::min(a, b)) return false;
  for (const auto& p : m) {
    if (ri[static_cast<std::size_t>(p.true_idx)] || ci[static_cast<std::size_t>(p.est_idx)]) return false;
    ri[static_cast<std::size_t>(p.true_idx)] = ci[static_cast<std::size_t>(p.est_idx)] = true;
  }
  return true;
}

Matrix gram_schmidt(const Matrix& v) {
  Matrix q = v;
  for (Index k = 0; k < q.cols(); ++k) {
    for (Index j = 0; j < k; ++j) q.col(k) -= q.col(j).dot(q.col(k)) * q.col(j);
    q.col(k).normalize();
  }
  return q;
}

}  // namespace

TEST(Projector, OrthonormalColumns) {
  RandomSource rs(1);
  const Matrix q = gram_schmidt(standard_normal(rs, 6, 2));
  EXPECT_LT((projector(q) - q * q.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Projector, SingleBasisVector) {
  Matrix e = Matrix::Zero(4, 1);
  e(0, 0) = 1.0;
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = 1.0;
  EXPECT_EQ(projector(e), expected);
}

TEST(Projector, NonOrthogonalMatchesGramSchmidt) {
  Matrix v(3, 2);
  v << 1, 1, 0, 1, 1, 2;
  const Matrix q = gram_schmidt(v);
  EXPECT_LT((projector(v) - q * q.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projector, IdempotentSymmetricTrace) {
  RandomSource rs(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix v = standard_normal(rs, 10, 4);
    const Matrix p = projector(v);
    EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(p.trace(), 4.0, 1e-8);
  }
}

TEST(Projector, RankDeficientThrows) {
  Matrix v(3, 2);
  v << 1, 2, 1, 2, 1, 2;
  EXPECT_EQ(kind_of([&] { projector(v); }), ErrorKind::RankDeficient);
}

TEST(Selectivity, PerfectAndZeroReconstruction) {
  RandomSource rs(3);
  const Matrix x = standard_normal(rs, 20, 5);
  const Matrix vs = standard_normal(rs, 5, 2), vn = standard_normal(rs, 5, 2);
  const Selectivity a = selectivity(x, x, vs, vn);
  EXPECT_DOUBLE_EQ(a.r2_true, 1.0);
  EXPECT_DOUBLE_EQ(a.r2_nuis, 1.0);
  EXPECT_DOUBLE_EQ(a.delta, 0.0);
  const Selectivity z = selectivity(x, Matrix::Zero(20, 5), vs, vn);
  EXPECT_NEAR(z.r2_true, 0.0, 1e-15);
  EXPECT_NEAR(z.r2_nuis, 0.0, 1e-15);
  EXPECT_NEAR(z.delta, 0.0, 1e-15);
}

TEST(Selectivity, OrthogonalSubspacesGiveUnitDelta) {
  RandomSource rs(4);
  const Matrix q = gram_schmidt(standard_normal(rs, 6, 4));
  const Matrix vs = q.leftCols(2), vn = q.rightCols(2);
  const Matrix x = standard_normal(rs, 30, 6);
  const Selectivity s = selectivity(x, x * projector(vs), vs, vn);
  EXPECT_NEAR(s.r2_true, 1.0, 1e-12);
  EXPECT_NEAR(s.r2_nuis, 0.0, 1e-12);
  EXPECT_NEAR(s.delta, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.delta, s.r2_true - s.r2_nuis);
}

TEST(Selectivity, ZeroSubspaceVariance) {
  Matrix x = Matrix::Zero(5, 3);
  x.col(0).setOnes();
  Matrix vs = Matrix::Zero(3, 1), vn = Matrix::Zero(3, 1);
  vs(0, 0) = 1.0;
  vn(2, 0) = 1.0;
  EXPECT_EQ(kind_of([&] { selectivity(x, x, vs, vn); }), ErrorKind::ZeroSubspaceVariance);
}

TEST(R2Global, ScalarCases) {
  RandomSource rs(5);
  const Matrix x = standard_normal(rs, 10, 4);
  EXPECT_DOUBLE_EQ(r2_global(x, x), 1.0);
  EXPECT_NEAR(r2_global(x, Matrix::Zero(10, 4)), 0.0, 1e-15);
  EXPECT_NEAR(r2_global(x, x / 2.0), 0.75, 1e-14);
  EXPECT_EQ(kind_of([] { r2_global(Matrix::Zero(2, 2), Matrix::Zero(2, 2)); }), ErrorKind::ZeroVariance);
}

TEST(Assignment, HandExampleCrossesOver) {
  Matrix sim(2, 2);
  sim << 0.9, 0.8, 0.7, 0.1;
  const auto m = solve_assignment(sim);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].true_idx, 0);
  EXPECT_EQ(m[0].est_idx, 1);
  EXPECT_EQ(m[1].true_idx, 1);
  EXPECT_EQ(m[1].est_idx, 0);
  EXPECT_NEAR(total(m) / 2.0, 0.75, 1e-15);
}

TEST(Assignment, DiagonalDominantAndSingleRow) {
  Matrix sim = Matrix::Constant(4, 4, 0.1) + Matrix::Identity(4, 4);
  const auto m = solve_assignment(sim);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(m[static_cast<std::size_t>(i)].est_idx, i);
  Matrix row(1, 3);
  row << 0.2, 0.9, 0.4;
  const auto r = solve_assignment(row);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].est_idx, 1);
}

TEST(Assignment, MatchesExhaustiveEnumeration) {
  RandomSource rs(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index a = 1 + static_cast<Index>(rs.uniform_int(6)), b = 1 + static_cast<Index>(rs.uniform_int(6));
    Matrix sim(a, b);
    for (Index i = 0; i < a; ++i)
      for (Index j = 0; j < b; ++j) sim(i, j) = rs.uniform();
    const auto m = solve_assignment(sim);
    ASSERT_TRUE(is_matching(m, a, b));
    EXPECT_NEAR(total(m), brute_force(sim), 1e-12) << a << "x" << b;
  }
}

TEST(Assignment, TiesStillOptimalAndDeterministic) {
  RandomSource rs(7);
  for (Index a = 1; a <= 6; ++a)
    for (Index b = 1; b <= 6; ++b) {
      const Matrix flat = Matrix::Constant(a, b, 0.5);
      const auto m = solve_assignment(flat);
      ASSERT_TRUE(is_matching(m, a, b));
      EXPECT_NEAR(total(m), brute_force(flat), 1e-12);
      for (std::size_t k = 0; k < m.size(); ++k) EXPECT_EQ(m[k].est_idx, static_cast<Index>(k));
      // Coarse values force many ties.
      Matrix coarse(a, b);
      for (Index i = 0; i < a; ++i)
        for (Index j = 0; j < b; ++j) coarse(i, j) = static_cast<double>(rs.uniform_int(3)) / 2.0;
      const auto c = solve_assignment(coarse);
      ASSERT_TRUE(is_matching(c, a, b));
      EXPECT_NEAR(total(c), brute_force(coarse), 1e-12);
      EXPECT_EQ(total(solve_assignment(coarse)), total(c));
    }
}

TEST(Alignment, PermutationAndSignInvariance) {
  RandomSource rs(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = 10, r = 1 + static_cast<Index>(rs.uniform_int(5));
    const Matrix v = standard_normal(rs, p, r);
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), 0);
    for (Index i = r - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rs.uniform_int(static_cast<std::uint64_t>(i + 1))]);
    Matrix w(p, r);
    for (Index k = 0; k < r; ++k) w.col(k) = (rs.bernoulli(0.5) ? -1.0 : 1.0) * 2.5 * v.col(perm[static_cast<std::size_t>(k)]);
    const Matrix other = standard_normal(rs, p, r);
    EXPECT_NEAR(alignment(w, v).score, 1.0, 1e-12);
    EXPECT_NEAR(alignment(w, other).score, alignment(v, other).score, 1e-12);
    const double s = alignment(other, v).score;
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Alignment, OrthogonalComplementScoresZero) {
  Matrix vs = Matrix::Zero(4, 2), vh = Matrix::Zero(4, 2);
  vs(0, 0) = vs(1, 1) = 1.0;
  vh(2, 0) = vh(3, 1) = 1.0;
  EXPECT_NEAR(alignment(vh, vs).score, 0.0, 1e-15);
}

TEST(Alignment, ZeroColumnScoresZeroAndEmptyThrows) {
  Matrix vs = Matrix::Identity(3, 2), vh = Matrix::Zero(3, 2);
  vh(0, 0) = 2.0;
  EXPECT_NEAR(alignment(vh, vs).score, 0.5, 1e-15);
  EXPECT_EQ(kind_of([] { alignment(Matrix::Zero(3, 0), Matrix::Identity(3, 1)); }), ErrorKind::EmptyLoadings);
}

TEST(LaplacianEnergy, EqualsTraceForm) {
  RandomSource rs(9);
  const FeatureGraph g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  const Matrix v = standard_normal(rs, 4, 2);
  EXPECT_NEAR(laplacian_energy(g, v), (v.transpose() * g.laplacian() * v).trace(), 1e-12);
}

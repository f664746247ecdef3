#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "grpca/numerics.hpp"

using namespace grpca;

namespace {

Matrix p3_laplacian() {
  Matrix l(3, 3);
  l << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  return l;
}

}  // namespace

TEST(Cholesky, IdentityFactorsToIdentity) {
  EXPECT_TRUE(cholesky(Matrix::Identity(3, 3)).lower.isApprox(Matrix::Identity(3, 3)));
}

TEST(Cholesky, TwoByTwoMatchesHandFactor) {
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  const Matrix l = cholesky(a).lower;
  EXPECT_LT((l - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((l * l.transpose() - a).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cholesky, IndefiniteThrows) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  try {
    (void)cholesky(a);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}

TEST(Cholesky, LogDetMatchesProductOfPivots) {
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  EXPECT_NEAR(cholesky(a).log_det(), std::log(8.0), 1e-13);
}

TEST(SymmetricEigen, DiagonalInputSortsValues) {
  const Matrix d = Vector((Vector(3) << 3, 1, 2).finished()).asDiagonal();
  const EigenDecomposition e = symmetric_eigen(d);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 2.0, 1e-14);
  EXPECT_NEAR(e.values(2), 3.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(2, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 2)), 1.0, 1e-14);
}

TEST(SymmetricEigen, PathGraphLaplacian) {
  // det(L - tI) = -t (t - 1)(t - 3)
  const EigenDecomposition e = symmetric_eigen(p3_laplacian());
  EXPECT_NEAR(e.values(0), 0.0, 1e-12);
  EXPECT_NEAR(e.values(1), 1.0, 1e-12);
  EXPECT_NEAR(e.values(2), 3.0, 1e-12);
}

TEST(SymmetricEigen, ZeroMatrix) {
  const EigenDecomposition e = symmetric_eigen(Matrix::Zero(4, 4));
  EXPECT_EQ(e.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SymmetricEigen, RandomMatchesReferenceSolver) {
  RandomSource rs(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix b = standard_normal(rs, 12, 12);
    const Matrix a = b + b.transpose();
    const EigenDecomposition e = symmetric_eigen(a);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
    EXPECT_LT((e.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a * e.vectors - e.vectors * e.values.asDiagonal()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TruncatedSvd, IdentityHasUnitSingularValues) {
  const TruncatedSvd s = truncated_svd(Matrix::Identity(4, 4), 2);
  EXPECT_NEAR(s.s(0), 1.0, 1e-14);
  EXPECT_NEAR(s.s(1), 1.0, 1e-14);
}

TEST(TruncatedSvd, RankOneOuterProduct) {
  Vector a(4), b(3);
  a << 1, 2, -1, 0.5;
  b << 3, -1, 2;
  const Matrix x = a * b.transpose();
  const TruncatedSvd s = truncated_svd(x, 1);
  EXPECT_NEAR(s.s(0), a.norm() * b.norm(), 1e-12);
  EXPECT_LT((s.u * s.s.asDiagonal() * s.v.transpose() - x).norm(), 1e-12);
}

TEST(TruncatedSvd, RandomMatchesGramOracle) {
  RandomSource rs(5);
  const Matrix x = standard_normal(rs, 8, 5);
  const TruncatedSvd s = truncated_svd(x, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(x.transpose() * x);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(s.s(j), std::sqrt(ref.eigenvalues()(4 - j)), 1e-6);
  const Matrix top = ref.eigenvectors().rightCols(3);
  EXPECT_LT(max_principal_angle(s.v, top), 1e-6);
}

TEST(TruncatedSvd, RandomizedPathMatchesReference) {
  RandomSource rs(6);
  const Index n = 700, p = 600;
  Matrix x = standard_normal(rs, n, 5) * standard_normal(rs, 5, p) * 10.0 + standard_normal(rs, n, p) * 0.1;
  const TruncatedSvd s = truncated_svd(x, 5);
  Eigen::JacobiSVD<Matrix> ref(x, Eigen::ComputeThinV);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(s.s(j) / ref.singularValues()(j), 1.0, 1e-8);
  EXPECT_LT(max_principal_angle(s.v, ref.matrixV().leftCols(5)), 1e-6);
}

TEST(TruncatedSvd, RankTooLargeThrows) {
  try {
    (void)truncated_svd(Matrix::Identity(3, 2), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankTooLarge);
  }
}

TEST(SpdSolve, IdentityReturnsRhs) {
  RandomSource rs(2);
  const Matrix b = standard_normal(rs, 3, 2);
  EXPECT_TRUE(spd_solve(Matrix::Identity(3, 3), b).isApprox(b, 1e-15));
}

TEST(SpdSolve, ScaledIdentity) {
  Matrix b(2, 1);
  b << 4, 6;
  const Matrix x = spd_solve(2.0 * Matrix::Identity(2, 2), b);
  EXPECT_NEAR(x(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(x(1, 0), 3.0, 1e-15);
}

TEST(SpdSolve, TikhonovFilterOnPath) {
  // (I + L) for P3 is [[2,-1,0],[-1,3,-1],[0,-1,2]]; its inverse times e1 is
  // (5, 2, 1) / 8 by cofactors (determinant 8).
  const Matrix a = Matrix::Identity(3, 3) + p3_laplacian();
  Matrix b = Matrix::Zero(3, 1);
  b(0, 0) = 1.0;
  const Matrix x = spd_solve(a, b);
  EXPECT_NEAR(x(0, 0), 5.0 / 8.0, 1e-14);
  EXPECT_NEAR(x(1, 0), 2.0 / 8.0, 1e-14);
  EXPECT_NEAR(x(2, 0), 1.0 / 8.0, 1e-14);
  EXPECT_LT((a * x - b).norm(), 1e-14);
}

TEST(StandardNormal, SameSeedIsDeterministic) {
  RandomSource a(42), b(42);
  EXPECT_EQ(standard_normal(a, 10, 7), standard_normal(b, 10, 7));
}

TEST(StandardNormal, LargeSampleMeanAndVariance) {
  RandomSource rs(1);
  const Matrix z = standard_normal(rs, 1000, 1000);
  EXPECT_LT(std::abs(z.mean()), 0.01);
  EXPECT_NEAR(z.squaredNorm() / 1e6, 1.0, 0.01);
}

TEST(StandardNormal, DifferentSeedsDiffer) {
  RandomSource a(1), b(2);
  const Matrix za = standard_normal(a, 100, 100), zb = standard_normal(b, 100, 100);
  EXPECT_GE((za.array() != zb.array()).count(), 9900);
}

TEST(RandomSource, SubstreamsAreReproducibleAndDistinct) {
  const RandomSource root(9);
  RandomSource a = root.substream(3), b = root.substream(3), c = root.substream(4);
  const auto va = a.next_u64();
  EXPECT_EQ(va, b.next_u64());
  EXPECT_NE(va, c.next_u64());
}

TEST(RandomSource, UniformIntStaysInRange) {
  RandomSource rs(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[rs.uniform_int(7)];
  for (int h : hits) EXPECT_GT(h, 850);
}

TEST(PrincipalAngle, SameSpanDifferentBasis) {
  RandomSource rs(4);
  const Matrix a = standard_normal(rs, 6, 2);
  Matrix mix(2, 2);
  mix << 2, 1, -1, 3;
  EXPECT_LT(max_principal_angle(a, a * mix), 1e-7);
  Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1);
  e1(0, 0) = 1;
  e2(1, 0) = 1;
  EXPECT_NEAR(max_principal_angle(e1, e2), std::numbers::pi / 2, 1e-12);
}

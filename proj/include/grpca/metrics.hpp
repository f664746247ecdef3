#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/numerics.hpp"

namespace grpca {

/// Orthogonal projector V (V^T V)^{-1} V^T onto the column space of V.
inline Matrix projector(const Matrix& v) {
  if (v.cols() == 0) return Matrix::Zero(v.rows(), v.rows());
  const Matrix m = v.transpose() * v;
  try {
    const CholeskyFactor f = cholesky(0.5 * (m + m.transpose()));
    return v * f.solve(v.transpose());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotPositiveDefinite) fail(ErrorKind::RankDeficient, "projector: V lacks full column rank");
    throw;
  }
}

struct Selectivity {
  double r2_true = 0.0;
  double r2_nuis = 0.0;
  double delta = 0.0;
};

namespace detail {

inline double subspace_r2(const Matrix& x, const Matrix& residual, const Matrix& proj, const char* which) {
  const double denom = (x * proj).squaredNorm();
  if (!(denom > 0.0)) fail(ErrorKind::ZeroSubspaceVariance, std::string(which) + " subspace carries no test variance");
  return 1.0 - (residual * proj).squaredNorm() / denom;
}

}  // namespace detail

/// Variance explained by the reconstruction inside the true and nuisance
/// subspaces, and their difference.
inline Selectivity selectivity(const Matrix& x_te, const Matrix& xhat_te, const Matrix& v_star, const Matrix& v_nu) {
  require(x_te.rows() == xhat_te.rows() && x_te.cols() == xhat_te.cols(), ErrorKind::DimensionMismatch,
          "selectivity: X " + detail::shape(x_te) + " vs Xhat " + detail::shape(xhat_te));
  require(v_star.rows() == x_te.cols() && v_nu.rows() == x_te.cols(), ErrorKind::DimensionMismatch,
          "selectivity: loadings must have one row per feature");
  const Matrix residual = x_te - xhat_te;
  Selectivity out;
  out.r2_true = detail::subspace_r2(x_te, residual, projector(v_star), "true");
  out.r2_nuis = detail::subspace_r2(x_te, residual, projector(v_nu), "nuisance");
  out.delta = out.r2_true - out.r2_nuis;
  return out;
}

/// 1 - ||X - Xhat||^2 / ||X||^2
inline double r2_global(const Matrix& x_te, const Matrix& xhat_te) {
  require(x_te.rows() == xhat_te.rows() && x_te.cols() == xhat_te.cols(), ErrorKind::DimensionMismatch,
          "r2_global: X " + detail::shape(x_te) + " vs Xhat " + detail::shape(xhat_te));
  const double denom = x_te.squaredNorm();
  if (!(denom > 0.0)) fail(ErrorKind::ZeroVariance, "r2_global: test matrix is zero");
  return 1.0 - (x_te - xhat_te).squaredNorm() / denom;
}

inline double laplacian_energy(const FeatureGraph& g, const Matrix& v) { return laplacian_quadratic(g, v); }

struct MatchedPair {
  Index true_idx = 0;
  Index est_idx = 0;
  double similarity = 0.0;
};

namespace detail {

// Minimum-cost assignment of every row of an n x m cost matrix (n <= m) to
// a distinct column; shortest augmenting path with potentials, O(n^2 m).
inline std::vector<Index> hungarian_min(const Matrix& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> owner(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    owner[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = owner[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (owner[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      owner[static_cast<std::size_t>(j0)] = owner[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> col_of_row(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= m; ++j)
    if (owner[static_cast<std::size_t>(j)] != 0) col_of_row[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return col_of_row;
}

// Best total similarity over matchings of size min(a, b) restricted to the
// given rows and columns.
inline double best_total(const Matrix& sim, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const bool flip = rows.size() > cols.size();
  const auto& rr = flip ? cols : rows;
  const auto& cc = flip ? rows : cols;
  Matrix cost(static_cast<Index>(rr.size()), static_cast<Index>(cc.size()));
  for (std::size_t i = 0; i < rr.size(); ++i)
    for (std::size_t j = 0; j < cc.size(); ++j)
      cost(static_cast<Index>(i), static_cast<Index>(j)) =
          -(flip ? sim(cc[j], rr[i]) : sim(rr[i], cc[j]));
  const auto assign = hungarian_min(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < assign.size(); ++i) total -= cost(static_cast<Index>(i), assign[i]);
  return total;
}

}  // namespace detail

/// Maximum-weight one-to-one matching of size min(a, b) between the rows
/// (true components) and columns (estimates) of `sim`. Among optimal
/// matchings the lexicographically smallest (true_idx, est_idx) sequence is
/// returned.
inline std::vector<MatchedPair> solve_assignment(const Matrix& sim) {
  require(sim.allFinite(), ErrorKind::InvalidArgument, "solve_assignment: similarity entries must be finite");
  const Index a = sim.rows();
  const Index b = sim.cols();
  std::vector<MatchedPair> out;
  if (a == 0 || b == 0) return out;

  std::vector<Index> rows(static_cast<std::size_t>(a)), cols(static_cast<std::size_t>(b));
  for (Index i = 0; i < a; ++i) rows[static_cast<std::size_t>(i)] = i;
  for (Index j = 0; j < b; ++j) cols[static_cast<std::size_t>(j)] = j;
  const double optimum = detail::best_total(sim, rows, cols);
  const double tol = 1e-12 * (1.0 + std::abs(optimum)) + 1e-12 * static_cast<double>(a + b);

  auto without = [](std::vector<Index> v, Index x) {
    v.erase(std::find(v.begin(), v.end(), x));
    return v;
  };

  double committed = 0.0;
  Index remaining_matches = std::min(a, b);
  std::vector<Index> free_rows = rows;
  std::vector<Index> free_cols = cols;
  for (Index i = 0; i < a && remaining_matches > 0; ++i) {
    const auto rest_rows = without(free_rows, i);
    bool matched = false;
    for (Index j : free_cols) {
      const double total = committed + sim(i, j) + detail::best_total(sim, rest_rows, without(free_cols, j));
      if (total >= optimum - tol) {
        out.push_back({i, j, sim(i, j)});
        committed += sim(i, j);
        free_cols = without(free_cols, j);
        --remaining_matches;
        matched = true;
        break;
      }
    }
    free_rows = rest_rows;
    (void)matched;  // an unmatched row is only possible when a > b
  }
  return out;
}

struct Alignment {
  double score = 0.0;
  std::vector<MatchedPair> matching;
};

/// Mean |cosine| over the optimal matching of true and estimated loading
/// columns; columns are renormalized here and zero columns score 0.
inline Alignment alignment(const Matrix& v_hat, const Matrix& v_star) {
  require(v_hat.cols() > 0 && v_star.cols() > 0, ErrorKind::EmptyLoadings, "alignment: loadings have no columns");
  require(v_hat.rows() == v_star.rows(), ErrorKind::DimensionMismatch,
          "alignment: " + detail::shape(v_hat) + " vs " + detail::shape(v_star));
  auto unit = [](const Matrix& m) {
    Matrix out = m;
    for (Index k = 0; k < m.cols(); ++k) {
      const double nrm = m.col(k).norm();
      out.col(k) = nrm > 0.0 ? Vector(m.col(k) / nrm) : Vector::Zero(m.rows());
    }
    return out;
  };
  const Matrix sim = (unit(v_star).transpose() * unit(v_hat)).cwiseAbs();
  Alignment out;
  out.matching = solve_assignment(sim);
  double total = 0.0;
  for (const auto& m : out.matching) total += m.similarity;
  out.score = total / static_cast<double>(std::min(v_hat.cols(), v_star.cols()));
  return out;
}

}  // namespace grpca

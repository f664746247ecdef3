#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/numerics.hpp"

namespace grpca {

enum class Provenance { Oracle, GlassoCv, GlassoFixed, ThresholdedInverse };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Oracle: return "oracle";
    case Provenance::GlassoCv: return "glasso_cv";
    case Provenance::GlassoFixed: return "glasso_fixed";
    case Provenance::ThresholdedInverse: return "thresholded_inverse";
  }
  return "?";
}

struct CvPoint {
  double penalty = 0.0;
  double mean_loglik = -std::numeric_limits<double>::infinity();
  int converged_folds = 0;
};

struct PrecisionDiagnostics {
  bool converged = true;
  int iterations = 0;
  /// log det W + p after every sweep (non-decreasing). Its negation is the
  /// dual objective, an upper bound on the primal.
  std::vector<double> objective_trace;
  double primal_objective = 0.0;  // log det Theta - tr(S Theta) - penalty * |Theta|_1,off
  double dual_gap = 0.0;
  std::vector<CvPoint> cv_path;
};

struct PrecisionEstimate {
  Matrix theta;
  double penalty = 0.0;
  Provenance provenance = Provenance::Oracle;
  FeatureGraph support_graph;
  PrecisionDiagnostics diagnostics;
};

inline constexpr double kLearnedSupportThreshold = 1e-8;

/// S = X^T X / n for column-centred X.
inline Matrix empirical_covariance(const Matrix& x) {
  require(x.rows() >= 2, ErrorKind::TooFewSamples, "empirical_covariance: need at least two rows");
  Matrix s = x.transpose() * x / static_cast<double>(x.rows());
  return 0.5 * (s + s.transpose());
}

/// Penalized Gaussian log-likelihood being maximized by glasso.
inline double glasso_primal(const Matrix& s, const Matrix& theta, double penalty) {
  const CholeskyFactor f = cholesky(0.5 * (theta + theta.transpose()));
  double off = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
  return f.log_det() - (s.cwiseProduct(theta)).sum() - penalty * off;
}

struct GlassoOptions {
  double tol = 1e-4;
  int max_iter = 200;
  double inner_tol = 1e-10;
  int inner_max_iter = 2000;
};

/// Warm-start state for running glasso along a penalty path.
struct GlassoState {
  Matrix w;      // working covariance
  Matrix betas;  // column j holds the lasso coefficients of node j (beta_jj = 0)
};

namespace detail {

// Coordinate descent on  1/2 b^T W11 b - b^T s12 + rho |b|_1, with W11 the
// matrix W minus row/column j. `grad` tracks W b (entry j is W_j. b).
inline void lasso_column(const Matrix& w, const Matrix& s, Index j, double rho, Eigen::Ref<Vector> beta,
                         const GlassoOptions& opt) {
  const Index p = w.rows();
  Vector grad = w * beta;
  auto pass = [&](bool active_only) {
    double max_delta = 0.0;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      if (active_only && beta(k) == 0.0) continue;
      const double wkk = w(k, k);
      const double rk = s(k, j) - grad(k) + wkk * beta(k);
      const double mag = std::abs(rk) - rho;
      const double next = mag > 0.0 ? std::copysign(mag, rk) / wkk : 0.0;
      const double delta = next - beta(k);
      if (delta != 0.0) {
        grad += w.col(k) * delta;
        beta(k) = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    return max_delta;
  };
  for (int it = 0; it < opt.inner_max_iter; ++it) {
    if (pass(false) <= opt.inner_tol) break;
    for (int inner = 0; inner < opt.inner_max_iter; ++inner)
      if (pass(true) <= opt.inner_tol) break;
  }
}

inline Matrix assemble_precision(const Matrix& w, const Matrix& betas) {
  const Index p = w.rows();
  Matrix theta = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    const double denom = w(j, j) - w.col(j).dot(betas.col(j));
    const double tjj = 1.0 / denom;
    theta.col(j) = -betas.col(j) * tjj;
    theta(j, j) = tjj;
  }
  return 0.5 * (theta + theta.transpose());
}

inline double mean_abs_offdiag(const Matrix& m) {
  const Index p = m.rows();
  if (p < 2) return 0.0;
  const double off = m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
  return off / static_cast<double>(p * (p - 1));
}

inline double max_abs_offdiag(const Matrix& m) {
  double out = 0.0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j) out = std::max(out, std::abs(m(i, j)));
  return out;
}

}  // namespace detail

inline bool fits(const GlassoState& st, Index p) {
  return st.w.rows() == p && st.w.cols() == p && st.betas.rows() == p && st.betas.cols() == p;
}

inline GlassoState glasso_initial_state(const Matrix& s) {
  GlassoState st;
  st.w = s;
  st.betas = Matrix::Zero(s.rows(), s.cols());
  return st;
}

/// Graphical lasso by block coordinate descent over columns, each block a
/// lasso solved by coordinate descent. The l1 penalty applies to the
/// off-diagonal entries only, so diag(W) = diag(S) throughout. A sweep
/// converges when the mean absolute change of W is at most
/// tol * mean |offdiag S|. Non-convergence returns the last iterate with
/// `converged = false`.
inline PrecisionEstimate glasso(const Matrix& s, double penalty, const GlassoOptions& opt = {},
                                GlassoState* warm = nullptr) {
  require(is_square(s), ErrorKind::DimensionMismatch, "glasso: S is " + detail::shape(s));
  require(is_symmetric(s, 1e-8), ErrorKind::InvalidArgument, "glasso: S must be symmetric");
  require(penalty > 0.0, ErrorKind::InvalidArgument, "glasso: penalty must be > 0");
  const Index p = s.rows();
  require((s.diagonal().array() > 0.0).all(), ErrorKind::NotPositiveDefinite, "glasso: S has a non-positive diagonal");
  try {
    (void)cholesky(s + 1e-8 * Matrix::Identity(p, p));
  } catch (const Error&) {
    fail(ErrorKind::NotPositiveDefinite, "glasso: S has an eigenvalue below -1e-8");
  }

  GlassoState local = glasso_initial_state(s);
  GlassoState& st = warm != nullptr && fits(*warm, p) ? *warm : local;

  PrecisionEstimate out;
  out.penalty = penalty;
  out.provenance = Provenance::GlassoFixed;
  auto& diag = out.diagnostics;
  diag.converged = false;

  const double scale = std::max(detail::mean_abs_offdiag(s), 1e-12);
  auto dual_value = [&st, p]() {
    try {
      return cholesky(st.w).log_det() + static_cast<double>(p);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  for (int sweep = 0; sweep < opt.max_iter; ++sweep) {
    const Matrix w_old = st.w;
    for (Index j = 0; j < p; ++j) {
      detail::lasso_column(st.w, s, j, penalty, st.betas.col(j), opt);
      Vector w12 = st.w * st.betas.col(j);
      w12(j) = s(j, j);
      st.w.col(j) = w12;
      st.w.row(j) = w12.transpose();
    }
    diag.iterations = sweep + 1;
    diag.objective_trace.push_back(dual_value());
    const double change = (st.w - w_old).cwiseAbs().sum() / static_cast<double>(p * p);
    if (change <= opt.tol * scale) {
      diag.converged = true;
      break;
    }
  }

  Matrix theta = detail::assemble_precision(st.w, st.betas);
  bool spd = true;
  try {
    (void)cholesky(theta);
  } catch (const Error&) {
    spd = false;
  }
  if (!spd) {
    // The column-wise iterate lost definiteness; fall back to W^{-1}, which
    // is SPD but generally dense.
    theta = spd_solve(st.w, Matrix::Identity(p, p));
    theta = 0.5 * (theta + theta.transpose());
    diag.converged = false;
  }
  out.theta = std::move(theta);
  out.support_graph = adjacency_from_precision(out.theta, kLearnedSupportThreshold);
  diag.primal_objective = glasso_primal(s, out.theta, penalty);
  const double dual = -(diag.objective_trace.empty() ? dual_value() : diag.objective_trace.back());
  diag.dual_gap = dual - diag.primal_objective;
  return out;
}

/// Twenty penalties log-spaced from max|offdiag S| down to 1% of it.
inline std::vector<double> default_penalty_path(const Matrix& s, int count = 20, double ratio = 0.01) {
  const double top = detail::max_abs_offdiag(s);
  require(top > 0.0, ErrorKind::InvalidArgument, "default_penalty_path: S is diagonal");
  std::vector<double> path(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    path[static_cast<std::size_t>(i)] = top * std::pow(ratio, t);
  }
  return path;
}

/// Held-out Gaussian log-likelihood log det Theta - tr(S_test Theta).
inline double heldout_loglik(const Matrix& theta, const Matrix& s_test) {
  return cholesky(theta).log_det() - s_test.cwiseProduct(theta).sum();
}

/// Contiguous fold boundaries: fold f covers rows [bounds[f], bounds[f+1]).
inline std::vector<Index> fold_bounds(Index n, Index k) {
  require(k >= 2 && k <= n, ErrorKind::InvalidArgument, "fold_bounds: need 2 <= k <= n");
  std::vector<Index> bounds(static_cast<std::size_t>(k + 1));
  for (Index f = 0; f <= k; ++f) bounds[static_cast<std::size_t>(f)] = (f * n) / k;
  return bounds;
}

inline Matrix remove_rows(const Matrix& x, Index begin, Index end) {
  Matrix out(x.rows() - (end - begin), x.cols());
  out.topRows(begin) = x.topRows(begin);
  out.bottomRows(x.rows() - end) = x.bottomRows(x.rows() - end);
  return out;
}

/// K-fold cross-validated graphical lasso. The path is evaluated from the
/// largest penalty down with warm starts; only converged fits score. The
/// penalty with the best mean held-out log-likelihood wins (ties go to the
/// larger penalty) and is refit on all rows.
inline PrecisionEstimate glasso_cv(const Matrix& x, Index k_folds, std::vector<double> path = {},
                                   const GlassoOptions& opt = {}) {
  require(k_folds >= 2, ErrorKind::InvalidArgument, "glasso_cv: need at least two folds");
  require(x.rows() >= k_folds, ErrorKind::TooFewSamples, "glasso_cv: fewer rows than folds");
  const Matrix centred = x.rowwise() - x.colwise().mean();
  const Matrix s_all = empirical_covariance(centred);
  if (path.empty()) path = default_penalty_path(s_all);
  for (double pen : path) require(pen > 0.0, ErrorKind::InvalidArgument, "glasso_cv: penalties must be > 0");
  std::sort(path.begin(), path.end(), std::greater<>());
  path.erase(std::unique(path.begin(), path.end()), path.end());

  std::vector<CvPoint> points(path.size());
  std::vector<double> sums(path.size(), 0.0);
  for (std::size_t i = 0; i < path.size(); ++i) points[i].penalty = path[i];

  const auto bounds = fold_bounds(x.rows(), k_folds);
  for (Index f = 0; f < k_folds; ++f) {
    const Index b = bounds[static_cast<std::size_t>(f)];
    const Index e = bounds[static_cast<std::size_t>(f + 1)];
    const Matrix train = remove_rows(x, b, e);
    const Vector mu = train.colwise().mean().transpose();
    const Matrix s_train = empirical_covariance(train.rowwise() - mu.transpose());
    const Matrix test = x.middleRows(b, e - b).rowwise() - mu.transpose();
    const Matrix s_test = test.transpose() * test / static_cast<double>(test.rows());
    GlassoState warm = glasso_initial_state(s_train);
    for (std::size_t i = 0; i < path.size(); ++i) {
      try {
        const PrecisionEstimate est = glasso(s_train, path[i], opt, &warm);
        if (!est.diagnostics.converged) continue;
        const double ll = heldout_loglik(est.theta, s_test);
        if (!std::isfinite(ll)) continue;
        sums[i] += ll;
        ++points[i].converged_folds;
      } catch (const Error&) {
        warm = glasso_initial_state(s_train);
      }
    }
  }

  std::size_t best = path.size();
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (points[i].converged_folds == 0) continue;
    points[i].mean_loglik = sums[i] / static_cast<double>(points[i].converged_folds);
    if (best == path.size() || points[i].mean_loglik > points[best].mean_loglik) best = i;
  }
  require(best < path.size(), ErrorKind::AllFitsFailed, "glasso_cv: no penalty converged on any fold");

  // Refit along the path down to the winner so the warm start matches CV.
  GlassoState warm = glasso_initial_state(s_all);
  PrecisionEstimate out;
  for (std::size_t i = 0; i <= best; ++i) out = glasso(s_all, path[i], opt, &warm);
  out.provenance = Provenance::GlassoCv;
  out.diagnostics.cv_path = std::move(points);
  return out;
}

/// Passthrough of a known precision matrix; support is its exact nonzeros.
inline PrecisionEstimate oracle_precision(const Matrix& theta_true) {
  require(is_square(theta_true), ErrorKind::DimensionMismatch, "oracle_precision: matrix is " + detail::shape(theta_true));
  (void)cholesky(theta_true);
  PrecisionEstimate out;
  out.theta = theta_true;
  out.penalty = 0.0;
  out.provenance = Provenance::Oracle;
  out.support_graph = adjacency_from_precision(theta_true, 0.0);
  return out;
}

/// S^{-1} with off-diagonal entries below `threshold` in magnitude zeroed.
inline PrecisionEstimate thresholded_inverse(const Matrix& s, double threshold) {
  require(is_square(s), ErrorKind::DimensionMismatch, "thresholded_inverse: S is " + detail::shape(s));
  const Index p = s.rows();
  Matrix theta = spd_solve(s, Matrix::Identity(p, p));
  theta = 0.5 * (theta + theta.transpose());
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i)
      if (i != j && std::abs(theta(i, j)) <= threshold) theta(i, j) = 0.0;
  (void)cholesky(theta);
  PrecisionEstimate out;
  out.theta = std::move(theta);
  out.penalty = threshold;
  out.provenance = Provenance::ThresholdedInverse;
  out.support_graph = adjacency_from_precision(out.theta, 0.0);
  return out;
}

}  // namespace grpca

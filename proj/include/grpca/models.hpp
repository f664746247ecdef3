#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/numerics.hpp"
#include "grpca/random.hpp"

namespace grpca {

enum class Method { Pca, SparsePca, Grpca };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Pca: return "pca";
    case Method::SparsePca: return "sparse_pca";
    case Method::Grpca: return "grpca";
  }
  return "?";
}

enum class Init { Svd, Random };

/// How the score update treats the scale of U.
///   LeastSquares: U = X V (V^T V)^{-1}, unconstrained.
///   Orthonormal:  U^T U = n I, U = sqrt(n) X V (V^T X^T X V)^{-1/2}, the
///                 exact minimizer over that set (orthogonal Procrustes).
/// With unconstrained U the penalties can be driven to zero by shrinking V
/// and inflating U, so iterates drift back to the PCA subspace; fixing the
/// score scale removes that direction.
enum class ScoreStep { LeastSquares, Orthonormal };

inline std::string to_string(ScoreStep s) { return s == ScoreStep::LeastSquares ? "least_squares" : "orthonormal"; }

struct GrpcaConfig {
  Index r = 8;
  double alpha = 1.0;
  double lambda = 0.0;
  int max_outer = 500;
  double tol_rel_obj = 1e-7;
  int inner_steps = 5;
  Init init = Init::Svd;
  std::uint64_t init_seed = 0;
  ScoreStep score_step = ScoreStep::Orthonormal;

  void validate() const {
    require(r >= 1, ErrorKind::InvalidParameter, "grpca: r must be >= 1");
    require(alpha > 0.0, ErrorKind::InvalidParameter, "grpca: alpha must be > 0");
    require(lambda >= 0.0, ErrorKind::InvalidParameter, "grpca: lambda must be >= 0");
    require(max_outer >= 1, ErrorKind::InvalidParameter, "grpca: max_outer must be >= 1");
    require(inner_steps >= 1, ErrorKind::InvalidParameter, "grpca: inner_steps must be >= 1");
    require(tol_rel_obj >= 0.0, ErrorKind::InvalidParameter, "grpca: tol_rel_obj must be >= 0");
  }
};

struct FactorModel {
  Matrix U;  // n x r
  Matrix V;  // p x r
  std::vector<double> objective_trace;
  bool converged = false;
  bool all_zero_loadings = false;
  int iterations = 0;
  Method method = Method::Pca;
  double alpha = 0.0;
  double lambda = 0.0;
  ScoreStep score_step = ScoreStep::Orthonormal;
  std::optional<FeatureGraph> graph_used;
};

/// Row weights 1 / (1 + d_j) of the degree-weighted l1 term.
inline Vector degree_weights(const FeatureGraph& g) {
  Vector w(g.p());
  for (Index j = 0; j < g.p(); ++j) w(j) = 1.0 / (1.0 + static_cast<double>(g.degree(j)));
  return w;
}

/// sum_j w_j * ||V_j:||_1
inline double weighted_l1(const Matrix& v, const Vector& row_weights) {
  return (v.cwiseAbs().rowwise().sum().array() * row_weights.array()).sum();
}

/// 1/2 ||X - U V^T||_F^2 + alpha sum_j ||V_j:||_1 / (1 + d_j) + lambda/2 tr(V^T L V)
inline double objective(const Matrix& x, const Matrix& u, const Matrix& v, const FeatureGraph& g, double alpha,
                        double lambda) {
  require(x.rows() == u.rows() && x.cols() == v.rows() && u.cols() == v.cols() && g.p() == x.cols(),
          ErrorKind::DimensionMismatch,
          "objective: X " + detail::shape(x) + ", U " + detail::shape(u) + ", V " + detail::shape(v));
  const double fit = 0.5 * (x - u * v.transpose()).squaredNorm();
  return fit + alpha * weighted_l1(v, degree_weights(g)) + 0.5 * lambda * laplacian_quadratic(g, v);
}

/// Gradient of the smooth part g(V) = 1/2 ||X - U V^T||^2 + lambda/2 tr(V^T L V)
/// with U held fixed: V (U^T U) - X^T U + lambda L V.
inline Matrix smooth_gradient(const Matrix& x, const Matrix& u, const Matrix& v, const Matrix& laplacian,
                              double lambda) {
  Matrix grad = v * (u.transpose() * u) - x.transpose() * u;
  if (lambda != 0.0) grad += lambda * laplacian * v;
  return grad;
}

/// Largest violation of the subgradient optimality conditions of the V
/// subproblem (U fixed): |grad_jk| <= alpha w_j where V_jk = 0, and
/// grad_jk + alpha w_j sign(V_jk) = 0 elsewhere.
inline double kkt_violation(const Matrix& grad, const Matrix& v, const Vector& row_weights, double alpha) {
  double worst = 0.0;
  for (Index k = 0; k < v.cols(); ++k)
    for (Index j = 0; j < v.rows(); ++j) {
      const double level = alpha * row_weights(j);
      const double viol = v(j, k) == 0.0 ? std::max(0.0, std::abs(grad(j, k)) - level)
                                         : std::abs(grad(j, k) + level * (v(j, k) > 0.0 ? 1.0 : -1.0));
      worst = std::max(worst, viol);
    }
  return worst;
}

namespace detail {

// Solves M Z = rhs for M = V^T V, adding the ridge 1e-10 tr(M)/r only when
// the plain Cholesky fails.
inline Matrix gram_solve(const Matrix& m, const Matrix& rhs) {
  try {
    return cholesky(m).solve(rhs);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
  }
  const double ridge = 1e-10 * m.trace() / static_cast<double>(m.rows());
  if (!(ridge > 0.0)) fail(ErrorKind::DegenerateLoadings, "loadings are identically zero");
  try {
    return cholesky(m + ridge * Matrix::Identity(m.rows(), m.cols())).solve(rhs);
  } catch (const Error&) {
    fail(ErrorKind::DegenerateLoadings, "V^T V is singular beyond ridge repair");
  }
}

// Moore-Penrose inverse square root of a PSD matrix. Directions with
// eigenvalue below 1e-12 of the largest map to zero; for the score step
// this stands for completing U with columns orthogonal to the column space
// of X, which exists whenever n >= rank(X) + r.
inline Matrix inverse_sqrt_psd(const Matrix& k) {
  const EigenDecomposition e = symmetric_eigen(0.5 * (k + k.transpose()));
  const double top = std::max(e.values.maxCoeff(), 0.0);
  Vector d(e.values.size());
  for (Index i = 0; i < d.size(); ++i) d(i) = e.values(i) > 1e-12 * top && top > 0.0 ? 1.0 / std::sqrt(e.values(i)) : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

inline void canonical_signs(Matrix& u, Matrix& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0.0) {
      v.col(k) *= -1.0;
      if (u.cols() == v.cols()) u.col(k) *= -1.0;
    }
  }
}

inline Matrix row_soft_threshold(const Matrix& v, const Vector& levels) {
  Matrix out(v.rows(), v.cols());
  for (Index k = 0; k < v.cols(); ++k)
    for (Index j = 0; j < v.rows(); ++j) {
      const double mag = std::abs(v(j, k)) - levels(j);
      out(j, k) = mag > 0.0 ? std::copysign(mag, v(j, k)) : 0.0;
    }
  return out;
}

// Alternating exact-U / proximal-V solver. Works on the Gram matrix
// G = X^T X so each iteration costs O(p^2 r) regardless of n; U is only
// materialized at the end.
inline FactorModel alternating_fit(const Matrix& x, const Matrix& laplacian, const Vector& row_weights,
                                   const GrpcaConfig& cfg, Method method) {
  cfg.validate();
  const Index n = x.rows();
  const Index p = x.cols();
  require(cfg.r <= std::min(n, p), ErrorKind::RankTooLarge,
          "rank " + std::to_string(cfg.r) + " exceeds min dimension of " + detail::shape(x));
  const Matrix gram = x.transpose() * x;
  const double total = gram.trace();
  const double lambda = cfg.lambda;
  const bool smooth = lambda > 0.0;

  double lap_norm = 0.0;
  if (smooth) {
    const double gersh = 2.0 * laplacian.diagonal().maxCoeff();
    lap_norm = std::min(1.05 * spectral_norm_psd(laplacian), gersh);
  }

  Matrix v;
  if (cfg.init == Init::Svd) {
    v = truncated_svd(x, cfg.r).v;
  } else {
    RandomSource rs(cfg.init_seed);
    v = standard_normal(rs, p, cfg.r);
    for (Index k = 0; k < cfg.r; ++k) v.col(k).normalize();
  }

  // Objective with U = X V_u M^{-1} expressed through B = X^T U, C = U^T U.
  auto value = [&](const Matrix& vv, const Matrix& b, const Matrix& c) {
    const double fit = 0.5 * (total - 2.0 * (vv.cwiseProduct(b)).sum() + (c.cwiseProduct(vv.transpose() * vv)).sum());
    double pen = cfg.alpha * weighted_l1(vv, row_weights);
    if (smooth) pen += 0.5 * lambda * (vv.cwiseProduct(laplacian * vv)).sum();
    return fit + pen;
  };

  FactorModel model;
  model.method = method;
  model.alpha = cfg.alpha;
  model.score_step = cfg.score_step;
  model.lambda = lambda;

  const double root_n = std::sqrt(static_cast<double>(n));
  Matrix b, c;
  auto u_step = [&](const Matrix& vv) {
    const Matrix gv = gram * vv;
    if (cfg.score_step == ScoreStep::LeastSquares) {
      // U = X V M^{-1}; B = G V M^{-1}; C = M^{-1} V^T G V M^{-1}
      const Matrix m = vv.transpose() * vv;
      const Matrix bt = gram_solve(m, gv.transpose());  // M^{-1} V^T G
      b = bt.transpose();
      c = gram_solve(m, vv.transpose() * b);
      c = 0.5 * (c + c.transpose());
    } else {
      // U = sqrt(n) X V K^{-1/2} with K = V^T G V; B = sqrt(n) G V K^{-1/2}, C = n I.
      b = root_n * gv * inverse_sqrt_psd(vv.transpose() * gv);
      c = static_cast<double>(n) * Matrix::Identity(cfg.r, cfg.r);
    }
  };

  double prev = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    if (v.isZero(0.0)) {
      model.all_zero_loadings = true;
      break;
    }
    u_step(v);
    const double after_u = value(v, b, c);
    if (outer == 0) {
      prev = after_u;
      model.objective_trace.push_back(prev);
    }
    const double c_norm = std::max(symmetric_eigen(c).values.maxCoeff(), 0.0);
    double step = 1.0 / std::max(c_norm + lambda * lap_norm, 1e-300);
    const Matrix v_start = v;
    double current = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      v = v_start;
      for (int inner = 0; inner < cfg.inner_steps; ++inner) {
        Matrix grad = v * c - b;
        if (smooth) grad += lambda * laplacian * v;
        v = row_soft_threshold(v - step * grad, (step * cfg.alpha) * row_weights);
      }
      current = value(v, b, c);
      if (current <= after_u + 1e-12 * std::abs(after_u)) break;
      step *= 0.5;
    }
    if (current > after_u) {
      v = v_start;
      current = after_u;
    }
    model.objective_trace.push_back(current);
    model.iterations = outer + 1;
    const double rel = (prev - current) / std::max(std::abs(prev), 1e-300);
    prev = current;
    if (rel < cfg.tol_rel_obj) {
      model.converged = true;
      break;
    }
  }

  if (v.isZero(0.0)) {
    model.all_zero_loadings = true;
    model.converged = false;
    model.U = Matrix::Zero(n, cfg.r);
    model.V = Matrix::Zero(p, cfg.r);
    return model;
  }
  // Final exact U-step; it can only lower the objective.
  if (cfg.score_step == ScoreStep::LeastSquares)
    model.U = x * gram_solve(v.transpose() * v, v.transpose()).transpose();
  else
    model.U = root_n * (x * v) * inverse_sqrt_psd(v.transpose() * gram * v);
  model.V = std::move(v);
  canonical_signs(model.U, model.V);
  return model;
}

}  // namespace detail

/// GR-PCA: degree-weighted l1 plus Laplacian smoothing of the loadings.
inline FactorModel fit_grpca(const Matrix& x, const FeatureGraph& g, const GrpcaConfig& cfg) {
  require(g.p() == x.cols(), ErrorKind::DimensionMismatch,
          "fit_grpca: graph has " + std::to_string(g.p()) + " nodes, X has " + std::to_string(x.cols()) + " columns");
  FactorModel m = detail::alternating_fit(x, g.laplacian(), degree_weights(g), cfg, Method::Grpca);
  m.graph_used = g;
  return m;
}

/// l1-penalized factorization with unit row weights and no Laplacian term.
inline FactorModel fit_sparse_pca(const Matrix& x, Index r, double alpha, GrpcaConfig cfg = {}) {
  cfg.r = r;
  cfg.alpha = alpha;
  cfg.lambda = 0.0;
  const Index p = x.cols();
  return detail::alternating_fit(x, Matrix::Zero(p, p), Vector::Ones(p), cfg, Method::SparsePca);
}

/// Rank-r PCA: V = top right singular vectors, U = X V.
inline FactorModel fit_pca(const Matrix& x, Index r) {
  const TruncatedSvd svd = truncated_svd(x, r);
  FactorModel m;
  m.method = Method::Pca;
  m.V = svd.v;
  m.U = x * m.V;
  detail::canonical_signs(m.U, m.V);
  m.objective_trace.push_back(0.5 * (x - m.U * m.V.transpose()).squaredNorm());
  m.converged = true;
  m.iterations = 1;
  return m;
}

/// Least-squares scores of new rows against the frozen loadings.
inline Matrix transform(const FactorModel& model, const Matrix& x_new) {
  require(x_new.cols() == model.V.rows(), ErrorKind::DimensionMismatch,
          "transform: X_new has " + std::to_string(x_new.cols()) + " columns, model has " +
              std::to_string(model.V.rows()) + " features");
  if (model.V.isZero(0.0)) fail(ErrorKind::DegenerateLoadings, "transform: loadings are identically zero");
  const Matrix m = model.V.transpose() * model.V;
  return x_new * detail::gram_solve(m, model.V.transpose()).transpose();
}

inline Matrix reconstruct(const FactorModel& model, const Matrix& x_new) {
  return transform(model, x_new) * model.V.transpose();
}

}  // namespace grpca

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grpca/error.hpp"
#include "grpca/random.hpp"

namespace grpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace detail {

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

inline bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

inline bool is_symmetric(const Matrix& a, double tol = 1e-10) {
  if (!is_square(a)) return false;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Lower-triangular factor with `lower * lower^T == A`.
struct CholeskyFactor {
  Matrix lower;

  Index dim() const { return lower.rows(); }

  /// Solves A X = B.
  Matrix solve(const Matrix& rhs) const {
    require(rhs.rows() == dim(), ErrorKind::DimensionMismatch,
            "cholesky solve: rhs " + detail::shape(rhs) + " vs dim " + std::to_string(dim()));
    Matrix y = lower.triangularView<Eigen::Lower>().solve(rhs);
    return lower.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  double log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }
};

inline constexpr double kCholeskyPivotFloor = 1e-12;

/// Unpivoted Cholesky. Any pivot at or below 1e-12 is reported as
/// NotPositiveDefinite.
inline CholeskyFactor cholesky(const Matrix& a) {
  require(is_square(a), ErrorKind::DimensionMismatch, "cholesky: matrix is " + detail::shape(a));
  require(is_symmetric(a, 1e-10), ErrorKind::InvalidArgument, "cholesky: matrix is not symmetric");
  const Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > kCholeskyPivotFloor)) {
      fail(ErrorKind::NotPositiveDefinite,
           "cholesky: pivot " + std::to_string(pivot) + " at index " + std::to_string(j));
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    const Index below = n - j - 1;
    if (below > 0) {
      l.col(j).tail(below) =
          (a.col(j).tail(below) - l.bottomLeftCorner(below, j) * l.row(j).head(j).transpose()) / ljj;
    }
  }
  return CholeskyFactor{std::move(l)};
}

/// Solves A X = B for symmetric positive-definite A.
inline Matrix spd_solve(const Matrix& a, const Matrix& b) {
  require(is_square(a) && a.rows() == b.rows(), ErrorKind::DimensionMismatch,
          "spd_solve: A " + detail::shape(a) + ", B " + detail::shape(b));
  return cholesky(a).solve(b);
}

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

/// Cyclic Jacobi eigensolver for symmetric matrices. The input is
/// symmetrized as (A + A^T) / 2 first. Sweeps stop once the off-diagonal
/// mass falls below 1e-15 of the Frobenius norm; more than 100 * dim sweeps
/// raise NoConvergence.
inline EigenDecomposition symmetric_eigen(const Matrix& input) {
  require(is_square(input), ErrorKind::DimensionMismatch,
          "symmetric_eigen: matrix is " + detail::shape(input));
  const Index n = input.rows();
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double norm = a.norm();

  auto off_diagonal = [&a, n] {
    double sum = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
  };

  const Index max_sweeps = 100 * std::max<Index>(n, 1);
  bool converged = norm == 0.0 || n == 1;
  for (Index sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (off_diagonal() <= 1e-15 * norm) {
      converged = true;
      break;
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) continue;
        Eigen::JacobiRotation<double> rot;
        if (!rot.makeJacobi(a, p, q)) continue;
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        v.applyOnTheRight(p, q, rot);
      }
    }
  }
  if (!converged && off_diagonal() > 1e-15 * norm) {
    fail(ErrorKind::NoConvergence, "symmetric_eigen: exceeded " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&a](Index x, Index y) { return a(x, x) < a(y, y); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double spectral_norm_psd(const Matrix& a, int max_iter = 1000, double rel_tol = 1e-12) {
  require(is_square(a), ErrorKind::DimensionMismatch, "spectral_norm_psd: matrix is " + detail::shape(a));
  const Index n = a.rows();
  if (n == 0) return 0.0;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.01 * static_cast<double>((i * 7919) % 101);
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = a * x;
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double next = x.dot(y);
    x = y / ny;
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return std::max(estimate, 0.0);
}

/// Replaces the columns flagged in `fill` with unit vectors orthogonal to
/// every other column. The unflagged columns must already be orthonormal.
inline void complete_orthonormal(Matrix& q, const std::vector<bool>& fill) {
  const Index m = q.rows();
  std::vector<Index> kept;
  for (Index k = 0; k < q.cols(); ++k)
    if (!fill[static_cast<std::size_t>(k)]) kept.push_back(k);
  Index candidate = 0;
  for (Index k = 0; k < q.cols(); ++k) {
    if (!fill[static_cast<std::size_t>(k)]) continue;
    while (candidate < m) {
      Vector e = Vector::Unit(m, candidate++);
      for (int pass = 0; pass < 2; ++pass)
        for (Index j : kept) e -= q.col(j).dot(e) * q.col(j);
      const double nrm = e.norm();
      if (nrm > 0.5) {
        q.col(k) = e / nrm;
        kept.push_back(k);
        break;
      }
    }
  }
}

struct TruncatedSvd {
  Matrix u;  // n x r, orthonormal columns
  Vector s;  // r, non-negative, descending
  Matrix v;  // p x r, orthonormal columns
};

namespace detail {

// Top-r singular triplets from the eigendecomposition of the smaller Gram
// matrix. `x` is tall when `tall` is true (Gram = X^T X).
inline TruncatedSvd svd_via_gram(const Matrix& x, Index r) {
  const bool tall = x.rows() >= x.cols();
  const Matrix gram = tall ? Matrix(x.transpose() * x) : Matrix(x * x.transpose());
  const EigenDecomposition eig = symmetric_eigen(gram);
  const Index k = gram.rows();
  Matrix small(k, r);
  Vector s(r);
  for (Index j = 0; j < r; ++j) {
    small.col(j) = eig.vectors.col(k - 1 - j);
    s(j) = std::sqrt(std::max(eig.values(k - 1 - j), 0.0));
  }
  Matrix big = tall ? Matrix(x * small) : Matrix(x.transpose() * small);
  const double floor = (s.size() > 0 ? s(0) : 0.0) * 1e-12;
  std::vector<bool> fill(static_cast<std::size_t>(r), false);
  for (Index j = 0; j < r; ++j) {
    if (s(j) > floor && s(j) > 0.0) {
      big.col(j) /= s(j);
    } else {
      s(j) = std::max(s(j), 0.0);
      fill[static_cast<std::size_t>(j)] = true;
    }
  }
  complete_orthonormal(big, fill);
  if (tall) return TruncatedSvd{std::move(big), std::move(s), std::move(small)};
  return TruncatedSvd{std::move(small), std::move(s), std::move(big)};
}

inline Matrix orthonormal_basis(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

}  // namespace detail

/// Fills a rows x cols matrix with N(0, 1) draws taken in row-major order.
inline Matrix standard_normal(RandomSource& rs, Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = rs.normal();
  return out;
}

inline constexpr Index kGramSvdLimit = 512;

/// Rank-r truncated SVD. Uses the Gram eigendecomposition up to
/// min(n, p) = 512 and a randomized subspace iteration (2 oversampling
/// vectors, 7 power steps, fixed internal seed) above that.
inline TruncatedSvd truncated_svd(const Matrix& x, Index r) {
  require(r >= 1, ErrorKind::InvalidArgument, "truncated_svd: rank must be positive");
  const Index min_dim = std::min(x.rows(), x.cols());
  require(r <= min_dim, ErrorKind::RankTooLarge,
          "truncated_svd: rank " + std::to_string(r) + " exceeds min dimension of " + detail::shape(x));
  if (min_dim <= kGramSvdLimit) return detail::svd_via_gram(x, r);

  const Index k = std::min(r + 2, min_dim);
  RandomSource rs(0x5EEDULL);
  Matrix q = detail::orthonormal_basis(x * standard_normal(rs, x.cols(), k));
  for (int step = 0; step < 7; ++step) {
    Matrix z = detail::orthonormal_basis(x.transpose() * q);
    q = detail::orthonormal_basis(x * z);
  }
  const Matrix b = q.transpose() * x;  // k x p
  TruncatedSvd small = detail::svd_via_gram(b, r);
  return TruncatedSvd{q * small.u, std::move(small.s), std::move(small.v)};
}

/// Largest principal angle (radians) between the column spaces of a and b.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorKind::DimensionMismatch,
          "max_principal_angle: " + detail::shape(a) + " vs " + detail::shape(b));
  const Matrix qa = detail::orthonormal_basis(a);
  const Matrix qb = detail::orthonormal_basis(b);
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  const Vector sv = svd.singularValues();
  const double smin = std::clamp(sv.minCoeff(), -1.0, 1.0);
  return std::acos(smin);
}

}  // namespace grpca

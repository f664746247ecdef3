#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/numerics.hpp"
#include "grpca/random.hpp"

namespace grpca {

/// Synthetic generator parameters. Names follow the benchmark table where one
/// exists (p, n, r, gamma, omega, s, q_ratio, tau, beta, sigma_E).
struct GeneratorConfig {
  Index p = 144;
  Index n = 10000;
  Index r = 8;                     // smooth ground-truth components
  Index nuisance_count = 8;        // spike-bearing nuisance components
  std::optional<double> q_ratio;   // total nuisance variance / total true variance
  double gamma = 16.0;             // Tikhonov smoothness
  double omega = 0.4;              // soft-threshold level
  Index radius = 1;                // hop radius of every ball mask
  Index s = 60;                    // spikes per nuisance component
  double sigma1_sq = 400.0;        // leading score variance
  double decay = 0.8;              // geometric variance decay
  double tau = 0.55;
  double beta = 1.15;
  double sigma_E = 1.0;
  int max_omega_halvings = 10;     // degenerate-column fallback budget
  std::uint64_t seed = 0;
  std::vector<Index> centers;      // optional explicit ball centres (size r)

  void validate() const {
    require(p >= 3, ErrorKind::InvalidParameter, "generator: p must be >= 3");
    require(n >= 2, ErrorKind::InvalidParameter, "generator: n must be >= 2");
    require(r >= 1 && r <= p, ErrorKind::InvalidParameter, "generator: need 1 <= r <= p");
    require(nuisance_count >= 0, ErrorKind::InvalidParameter, "generator: nuisance_count must be >= 0");
    require(s >= 1, ErrorKind::InvalidParameter, "generator: s must be >= 1");
    require(gamma >= 0.0, ErrorKind::InvalidParameter, "generator: gamma must be >= 0");
    require(omega >= 0.0, ErrorKind::InvalidParameter, "generator: omega must be >= 0");
    require(radius >= 0, ErrorKind::InvalidParameter, "generator: radius must be >= 0");
    require(sigma1_sq > 0.0, ErrorKind::InvalidParameter, "generator: sigma1_sq must be > 0");
    require(decay > 0.0 && decay <= 1.0, ErrorKind::InvalidParameter, "generator: decay must lie in (0, 1]");
    require(tau > 0.0, ErrorKind::InvalidParameter, "generator: tau must be > 0");
    require(beta >= 0.0, ErrorKind::InvalidParameter, "generator: beta must be >= 0");
    require(sigma_E >= 0.0, ErrorKind::InvalidParameter, "generator: sigma_E must be >= 0");
    require(!q_ratio || *q_ratio >= 0.0, ErrorKind::InvalidParameter, "generator: q_ratio must be >= 0");
    require(centers.empty() || static_cast<Index>(centers.size()) == r, ErrorKind::InvalidParameter,
            "generator: explicit centers must have r entries");
  }
};

/// Entrywise sign(x) * max(|x| - level, 0).
inline Matrix soft_threshold(const Matrix& x, double level) {
  return x.unaryExpr([level](double v) {
    const double mag = std::abs(v) - level;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

struct TrueLoadings {
  Matrix loadings;                     // p x r, unit columns
  std::vector<Index> centers;
  std::vector<double> effective_omega; // per column, after any halving
};

/// Draws `count` distinct indices from `pool` (partial Fisher-Yates).
inline std::vector<Index> sample_without_replacement(std::vector<Index> pool, Index count, RandomSource& rs) {
  require(count <= static_cast<Index>(pool.size()), ErrorKind::InvalidArgument, "sample_without_replacement: pool too small");
  for (Index i = 0; i < count; ++i) {
    const auto span = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rs.uniform_int(span));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

/// Smooth ground-truth loadings: each column is the soft-thresholded
/// Tikhonov smoothing (I + gamma L)^{-1} b_k of a hop-ball mask, normalized
/// to unit length. An emptied column retries with omega halved, at most
/// `max_omega_halvings` times, before raising DegenerateComponent.
inline TrueLoadings make_true_loadings(const FeatureGraph& g, const GeneratorConfig& cfg, RandomSource& rs) {
  require(g.p() == cfg.p, ErrorKind::DimensionMismatch, "make_true_loadings: graph size differs from cfg.p");
  const Index p = g.p();
  TrueLoadings out;
  if (!cfg.centers.empty()) {
    out.centers = cfg.centers;
    for (Index c : out.centers) require(c >= 0 && c < p, ErrorKind::InvalidParameter, "center out of range");
  } else {
    std::vector<Index> nodes(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) nodes[static_cast<std::size_t>(i)] = i;
    out.centers = sample_without_replacement(std::move(nodes), cfg.r, rs);
  }

  Matrix masks = Matrix::Zero(p, cfg.r);
  for (Index k = 0; k < cfg.r; ++k) {
    const auto dist = g.distances_from(out.centers[static_cast<std::size_t>(k)]);
    for (Index j = 0; j < p; ++j) {
      const Index d = dist[static_cast<std::size_t>(j)];
      if (d >= 0 && d <= cfg.radius) masks(j, k) = 1.0;
    }
  }
  Matrix smoothed = masks;
  if (cfg.gamma > 0.0) {
    const Matrix filter = Matrix::Identity(p, p) + cfg.gamma * g.laplacian();
    smoothed = spd_solve(filter, masks);
  }

  out.loadings = Matrix::Zero(p, cfg.r);
  out.effective_omega.assign(static_cast<std::size_t>(cfg.r), cfg.omega);
  for (Index k = 0; k < cfg.r; ++k) {
    double level = cfg.omega;
    Vector col = soft_threshold(smoothed.col(k), level);
    int halvings = 0;
    while (col.norm() == 0.0 && halvings < cfg.max_omega_halvings) {
      level *= 0.5;
      ++halvings;
      col = soft_threshold(smoothed.col(k), level);
    }
    if (col.norm() == 0.0) {
      fail(ErrorKind::DegenerateComponent,
           "component " + std::to_string(k) + " vanishes after soft-thresholding at omega=" + std::to_string(level));
    }
    out.loadings.col(k) = col / col.norm();
    out.effective_omega[static_cast<std::size_t>(k)] = level;
  }
  return out;
}

/// Nodes whose degree is below the maximum degree.
inline std::vector<Index> sub_maximal_degree_nodes(const FeatureGraph& g) {
  const Index dmax = g.max_degree();
  std::vector<Index> out;
  for (Index j = 0; j < g.p(); ++j)
    if (g.degree(j) < dmax) out.push_back(j);
  return out;
}

/// Sparse high-frequency nuisance loadings: `s` distinct sub-maximal-degree
/// nodes per column with independent Rademacher signs, scaled to 1/sqrt(s).
inline Matrix make_nuisance_loadings(const FeatureGraph& g, const GeneratorConfig& cfg, RandomSource& rs) {
  require(g.p() == cfg.p, ErrorKind::DimensionMismatch, "make_nuisance_loadings: graph size differs from cfg.p");
  Matrix out = Matrix::Zero(g.p(), cfg.nuisance_count);
  if (cfg.nuisance_count == 0) return out;
  const std::vector<Index> boundary = sub_maximal_degree_nodes(g);
  require(static_cast<Index>(boundary.size()) >= cfg.s, ErrorKind::InsufficientBoundary,
          "only " + std::to_string(boundary.size()) + " sub-maximal-degree nodes for s=" + std::to_string(cfg.s));
  const double value = 1.0 / std::sqrt(static_cast<double>(cfg.s));
  for (Index l = 0; l < cfg.nuisance_count; ++l) {
    const auto nodes = sample_without_replacement(boundary, cfg.s, rs);
    for (Index j : nodes) out(j, l) = rs.bernoulli(0.5) ? value : -value;
  }
  return out;
}

enum class ScoreRole { True, Nuisance };

/// Per-column score variances. True components use sigma1_sq * decay^k.
/// Nuisance components follow the same geometric profile; when q_ratio is
/// set they are rescaled so their total equals q_ratio times the true total.
inline std::vector<double> score_variances(const GeneratorConfig& cfg, ScoreRole role) {
  const Index count = role == ScoreRole::True ? cfg.r : cfg.nuisance_count;
  std::vector<double> out(static_cast<std::size_t>(count));
  double power = 1.0;
  for (auto& v : out) {
    v = cfg.sigma1_sq * power;
    power *= cfg.decay;
  }
  if (role == ScoreRole::Nuisance && cfg.q_ratio && count > 0) {
    double true_total = 0.0;
    power = 1.0;
    for (Index k = 0; k < cfg.r; ++k) {
      true_total += cfg.sigma1_sq * power;
      power *= cfg.decay;
    }
    double nuis_total = 0.0;
    for (double v : out) nuis_total += v;
    const double scale = *cfg.q_ratio * true_total / nuis_total;
    for (auto& v : out) v *= scale;
  }
  return out;
}

/// n x variances.size() matrix with column k ~ N(0, variances[k]).
inline Matrix make_scores(const std::vector<double>& variances, RandomSource& rs, Index n) {
  Matrix z = standard_normal(rs, n, static_cast<Index>(variances.size()));
  for (std::size_t k = 0; k < variances.size(); ++k) z.col(static_cast<Index>(k)) *= std::sqrt(variances[k]);
  return z;
}

inline Matrix make_scores(const GeneratorConfig& cfg, RandomSource& rs, Index n, ScoreRole role) {
  return make_scores(score_variances(cfg, role), rs, n);
}

inline Matrix noise_precision(const FeatureGraph& g, double tau, double beta) {
  return tau * Matrix::Identity(g.p(), g.p()) + beta * g.laplacian();
}

/// n rows i.i.d. N(0, Theta^{-1}) with Theta = tau I + beta L. With
/// Theta = R R^T each row solves R^T x = z for a standard normal z.
inline Matrix sample_noise(const FeatureGraph& g, double tau, double beta, RandomSource& rs, Index n) {
  require(tau > 0.0, ErrorKind::NotPositiveDefinite, "sample_noise: tau must be > 0");
  const CholeskyFactor factor = cholesky(noise_precision(g, tau, beta));
  const Matrix z = standard_normal(rs, n, g.p());
  Matrix xt = factor.lower.transpose().triangularView<Eigen::Upper>().solve(z.transpose());
  return xt.transpose();
}

/// Per-column centring and scaling fitted on one matrix and reusable on
/// another (held-out folds use the training statistics).
struct ColumnScaler {
  Vector means;
  Vector stds;

  static ColumnScaler fit(const Matrix& x) {
    require(x.rows() >= 2, ErrorKind::TooFewSamples, "ColumnScaler: need at least two rows");
    ColumnScaler out;
    out.means = x.colwise().mean().transpose();
    out.stds.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - out.means(j)).square().mean();
      require(var > 0.0, ErrorKind::ZeroVariance, "column " + std::to_string(j) + " has zero variance");
      out.stds(j) = std::sqrt(var);
    }
    return out;
  }

  Matrix apply(const Matrix& x) const {
    require(x.cols() == means.size(), ErrorKind::DimensionMismatch, "ColumnScaler: column count differs");
    Matrix out = x.rowwise() - means.transpose();
    return out.array().rowwise() / stds.transpose().array();
  }
};

struct SyntheticBundle {
  GeneratorConfig config;
  TopologyKind topology;
  FeatureGraph graph;
  Matrix X;        // n x p, standardized
  Matrix V_star;   // p x r
  Matrix V_nu;     // p x nuisance_count
  Matrix U_star;
  Matrix U_nu;
  Matrix theta_true;
  Vector column_means;
  Vector column_stds;
  std::vector<Index> centers;
  std::vector<double> effective_omega;
  std::vector<double> true_variances;
  std::vector<double> nuisance_variances;
  double achieved_density = 0.0;
  std::uint64_t seed = 0;
};

/// Sub-stream keys used by generate_bundle; fixed so bundles are
/// reproducible from (config, seed) alone.
enum class GeneratorStream : std::uint64_t { Graph = 1, TrueLoadings, Nuisance, TrueScores, NuisanceScores, Noise };

/// End-to-end generator: graph, loadings, scores, graph-correlated noise,
/// X = U* V*^T + Unu Vnu^T + sigma_E E, then column standardization.
inline SyntheticBundle generate_bundle(const TopologyKind& kind, const GeneratorConfig& cfg) {
  cfg.validate();
  const RandomSource root(cfg.seed);
  auto stream = [&root](GeneratorStream s) { return root.substream(static_cast<std::uint64_t>(s)); };

  SyntheticBundle b;
  b.config = cfg;
  b.topology = kind;
  b.seed = cfg.seed;
  {
    RandomSource rs = stream(GeneratorStream::Graph);
    b.graph = generate_graph(kind, cfg.p, rs);
  }
  b.achieved_density = b.graph.density();
  {
    RandomSource rs = stream(GeneratorStream::TrueLoadings);
    TrueLoadings tl = make_true_loadings(b.graph, cfg, rs);
    b.V_star = std::move(tl.loadings);
    b.centers = std::move(tl.centers);
    b.effective_omega = std::move(tl.effective_omega);
  }
  {
    RandomSource rs = stream(GeneratorStream::Nuisance);
    b.V_nu = make_nuisance_loadings(b.graph, cfg, rs);
  }
  b.true_variances = score_variances(cfg, ScoreRole::True);
  b.nuisance_variances = score_variances(cfg, ScoreRole::Nuisance);
  {
    RandomSource rs = stream(GeneratorStream::TrueScores);
    b.U_star = make_scores(b.true_variances, rs, cfg.n);
  }
  {
    RandomSource rs = stream(GeneratorStream::NuisanceScores);
    b.U_nu = make_scores(b.nuisance_variances, rs, cfg.n);
  }
  b.theta_true = noise_precision(b.graph, cfg.tau, cfg.beta);
  Matrix raw = b.U_star * b.V_star.transpose();
  if (cfg.nuisance_count > 0) raw += b.U_nu * b.V_nu.transpose();
  if (cfg.sigma_E > 0.0) {
    RandomSource rs = stream(GeneratorStream::Noise);
    raw += cfg.sigma_E * sample_noise(b.graph, cfg.tau, cfg.beta, rs, cfg.n);
  }
  const ColumnScaler scaler = ColumnScaler::fit(raw);
  b.X = scaler.apply(raw);
  b.column_means = scaler.means;
  b.column_stds = scaler.stds;
  return b;
}

}  // namespace grpca

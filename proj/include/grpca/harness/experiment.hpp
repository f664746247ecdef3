#pragma once

#include <algorithm>
#include <atomic>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "grpca/datagen.hpp"
#include "grpca/harness/config.hpp"
#include "grpca/harness/report.hpp"
#include "grpca/metrics.hpp"
#include "grpca/models.hpp"
#include "grpca/precision.hpp"

namespace grpca::harness {

/// One train/test split of one generated bundle, standardized with the
/// training statistics.
struct FoldData {
  Index fold = 0;
  Matrix train;
  Matrix test;
  ColumnScaler scaler;
};

inline std::vector<FoldData> make_folds(const Matrix& x, Index k) {
  const auto bounds = fold_bounds(x.rows(), k);
  std::vector<FoldData> out;
  out.reserve(static_cast<std::size_t>(k));
  for (Index f = 0; f < k; ++f) {
    const Index b = bounds[static_cast<std::size_t>(f)];
    const Index e = bounds[static_cast<std::size_t>(f + 1)];
    FoldData d;
    d.fold = f;
    const Matrix raw_train = remove_rows(x, b, e);
    d.scaler = ColumnScaler::fit(raw_train);
    d.train = d.scaler.apply(raw_train);
    d.test = d.scaler.apply(x.middleRows(b, e - b));
    out.push_back(std::move(d));
  }
  return out;
}

/// Replaces the learned arm's precision estimator (tests inject the oracle).
using PrecisionProvider = std::function<PrecisionEstimate(const Matrix& train, const SyntheticBundle& bundle)>;

struct ExperimentHooks {
  PrecisionProvider learned_precision;
};

inline PrecisionEstimate learn_precision(const Matrix& train, const ExperimentConfig& cfg) {
  const Matrix centred = train.rowwise() - train.colwise().mean();
  const auto path = default_penalty_path(empirical_covariance(centred), cfg.glasso_path_count, cfg.glasso_path_ratio);
  GlassoOptions opt;
  opt.tol = cfg.glasso_tol;
  opt.max_iter = cfg.glasso_max_iter;
  return glasso_cv(train, cfg.glasso_cv_folds, path, opt);
}

inline GrpcaConfig solver_config(const ExperimentConfig& cfg, Index n_train, double alpha, double lambda) {
  GrpcaConfig g;
  g.r = cfg.generator.r;
  g.alpha = alpha * static_cast<double>(n_train);
  g.lambda = lambda * static_cast<double>(n_train);
  g.max_outer = cfg.max_outer;
  g.tol_rel_obj = cfg.tol_rel_obj;
  g.inner_steps = cfg.inner_steps;
  g.score_step = cfg.score_step;
  return g;
}

inline MetricsReport blank_report(Arm arm, const ExperimentConfig& cfg, Topology topo, double density,
                                  double achieved, std::uint64_t seed, Index fold) {
  MetricsReport r;
  r.method = to_string(arm);
  r.regime = to_string(cfg.regime);
  r.topology = to_string(topo);
  r.density = density;
  r.achieved_density = achieved;
  r.seed = seed;
  r.fold = fold;
  return r;
}

inline void mark_failed(MetricsReport& r, const std::string& why) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.failed = true;
  r.failure = why;
  r.r2_true = r.r2_nuis = r.selectivity = r.alignment = r.r2_global = r.laplacian_energy = nan;
  r.matching.clear();
}

/// Scores a fitted model on the held-out fold against the bundle's truth.
/// Laplacian energy is taken on column-normalized loadings.
inline void score_model(MetricsReport& r, const FactorModel& model, const Matrix& test, const SyntheticBundle& b) {
  const Matrix xhat = reconstruct(model, test);
  const Selectivity sel = selectivity(test, xhat, b.V_star, b.V_nu);
  const Alignment al = alignment(model.V, b.V_star);
  r.r2_true = sel.r2_true;
  r.r2_nuis = sel.r2_nuis;
  r.selectivity = sel.delta;
  r.alignment = al.score;
  r.matching = al.matching;
  r.r2_global = r2_global(test, xhat);
  Matrix unit = model.V;
  for (Index k = 0; k < unit.cols(); ++k) {
    const double nrm = unit.col(k).norm();
    if (nrm > 0.0) unit.col(k) /= nrm;
  }
  r.laplacian_energy = laplacian_energy(b.graph, unit);
  r.iterations = model.iterations;
  r.model_converged = model.converged;
}

/// Fits one arm on one fold and scores it. `precision` overrides the arm's
/// own precision input (oracle Theta for grpca_oracle, glasso_cv for
/// grpca_learned). Errors become a failure-flagged row.
inline MetricsReport evaluate_fold(Arm arm, const FoldData& fd, const SyntheticBundle& b, const ExperimentConfig& cfg,
                                   Topology topo, double density, std::uint64_t seed,
                                   const PrecisionEstimate* precision = nullptr) {
  MetricsReport r = blank_report(arm, cfg, topo, density, b.achieved_density, seed, fd.fold);
  const Index n_train = fd.train.rows();
  try {
    FactorModel model;
    switch (arm) {
      case Arm::Pca:
        model = fit_pca(fd.train, cfg.generator.r);
        break;
      case Arm::SparsePca:
        model = fit_sparse_pca(fd.train, cfg.generator.r, cfg.sparse_alpha * static_cast<double>(n_train),
                               solver_config(cfg, n_train, cfg.sparse_alpha, 0.0));
        break;
      case Arm::GrpcaOracle:
      case Arm::GrpcaLearned: {
        PrecisionEstimate own;
        if (precision == nullptr) {
          r.precision_converged = false;
          own = arm == Arm::GrpcaOracle ? oracle_precision(b.theta_true) : learn_precision(fd.train, cfg);
          precision = &own;
        }
        r.precision_converged = precision->diagnostics.converged;
        r.support_edges = static_cast<long>(precision->support_graph.edge_count());
        model = fit_grpca(fd.train, precision->support_graph, solver_config(cfg, n_train, cfg.alpha, cfg.lambda));
        break;
      }
    }
    score_model(r, model, fd.test, b);
  } catch (const Error& e) {
    mark_failed(r, e.what());
  } catch (const std::exception& e) {
    mark_failed(r, std::string("Internal: ") + e.what());
  }
  return r;
}

/// Generator seed of one sweep point: a sub-stream of the user seed keyed
/// by topology and the exact density value, so adding grid points does not
/// reshuffle existing ones.
inline std::uint64_t point_seed(std::uint64_t seed, Topology topo, double density) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &density, sizeof bits);
  const std::uint64_t key = (static_cast<std::uint64_t>(topo) + 1) * 0x9E3779B97F4A7C15ULL ^ bits;
  return RandomSource(seed).substream(key).next_u64();
}

struct SweepPoint {
  Topology topology = Topology::ER;
  double density = 0.0;
  std::uint64_t seed = 0;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> out;
  for (Topology t : cfg.topologies)
    for (double d : cfg.density_grid)
      for (std::uint64_t s : cfg.seeds) out.push_back({t, d, s});
  return out;
}

/// All rows of one sweep point: generate, split, fit every arm per fold.
inline std::vector<MetricsReport> run_point(const SweepPoint& pt, const ExperimentConfig& cfg,
                                            const ExperimentHooks& hooks = {}) {
  std::vector<MetricsReport> rows;
  SyntheticBundle b;
  try {
    GeneratorConfig g = cfg.generator;
    g.seed = point_seed(pt.seed, pt.topology, pt.density);
    b = generate_bundle(density_to_params(pt.topology, g.p, pt.density, cfg.ws_rewire), g);
  } catch (const Error& e) {
    for (Arm arm : cfg.methods)
      for (Index f = 0; f < cfg.folds; ++f) {
        MetricsReport r = blank_report(arm, cfg, pt.topology, pt.density, std::numeric_limits<double>::quiet_NaN(),
                                       pt.seed, f);
        mark_failed(r, e.what());
        rows.push_back(std::move(r));
      }
    return rows;
  }
  const auto folds = make_folds(b.X, cfg.folds);
  for (const FoldData& fd : folds) {
    for (Arm arm : cfg.methods) {
      if (arm == Arm::GrpcaLearned && hooks.learned_precision) {
        MetricsReport r = blank_report(arm, cfg, pt.topology, pt.density, b.achieved_density, pt.seed, fd.fold);
        try {
          const PrecisionEstimate est = hooks.learned_precision(fd.train, b);
          r = evaluate_fold(arm, fd, b, cfg, pt.topology, pt.density, pt.seed, &est);
        } catch (const Error& e) {
          r.precision_converged = false;
          mark_failed(r, e.what());
        }
        rows.push_back(std::move(r));
      } else {
        rows.push_back(evaluate_fold(arm, fd, b, cfg, pt.topology, pt.density, pt.seed));
      }
    }
  }
  return rows;
}

/// Runs every sweep point on a pool of `threads` workers pulling from a
/// shared index. Rows are sorted by full key, so the result does not depend
/// on scheduling.
inline std::vector<MetricsReport> run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {},
                                                 const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  cfg.validate();
  const auto points = sweep_points(cfg);
  std::vector<std::vector<MetricsReport>> per_point(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      per_point[i] = run_point(points[i], cfg, hooks);
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, points.size());
      }
    }
  };
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), points.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<MetricsReport> rows;
  for (auto& v : per_point) rows.insert(rows.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  std::stable_sort(rows.begin(), rows.end(), report_less);
  return rows;
}

}  // namespace grpca::harness

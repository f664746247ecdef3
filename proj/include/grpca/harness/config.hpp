#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grpca/datagen.hpp"
#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/io.hpp"
#include "grpca/models.hpp"

namespace grpca::harness {

enum class Regime { Isotropic, Anisotropic };

inline std::string to_string(Regime r) { return r == Regime::Isotropic ? "isotropic" : "anisotropic"; }

inline Regime parse_regime(const std::string& s) {
  if (s == "isotropic") return Regime::Isotropic;
  if (s == "anisotropic") return Regime::Anisotropic;
  fail(ErrorKind::RangeViolation, "regime must be 'isotropic' or 'anisotropic', got '" + s + "'");
}

/// The four compared arms.
enum class Arm { Pca, SparsePca, GrpcaOracle, GrpcaLearned };

inline std::string to_string(Arm a) {
  switch (a) {
    case Arm::Pca: return "pca";
    case Arm::SparsePca: return "sparse_pca";
    case Arm::GrpcaOracle: return "grpca_oracle";
    case Arm::GrpcaLearned: return "grpca_learned";
  }
  return "?";
}

inline Arm parse_arm(const std::string& s) {
  if (s == "pca") return Arm::Pca;
  if (s == "sparse_pca") return Arm::SparsePca;
  if (s == "grpca_oracle") return Arm::GrpcaOracle;
  if (s == "grpca_learned") return Arm::GrpcaLearned;
  fail(ErrorKind::RangeViolation, "unknown method '" + s + "'");
}

inline const std::vector<double>& default_density_grid() {
  static const std::vector<double> grid{0.05, 0.10, 0.20, 0.30, 0.50, 0.70, 0.90};
  return grid;
}

struct ExperimentConfig {
  std::string preset = "paper";
  Regime regime = Regime::Isotropic;
  GeneratorConfig generator;  // seed is set per sweep point
  double ws_rewire = 0.1;
  std::vector<Topology> topologies{Topology::ER, Topology::BA, Topology::WS};
  std::vector<double> density_grid = default_density_grid();
  std::vector<Arm> methods{Arm::Pca, Arm::SparsePca, Arm::GrpcaOracle, Arm::GrpcaLearned};
  Index folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  // Model hyperparameters. alpha, lambda and sparse_alpha are per training
  // sample: the solver receives them multiplied by the training row count.
  double alpha = 0.0;
  double lambda = 0.0;
  double sparse_alpha = 0.0;
  int max_outer = 500;
  double tol_rel_obj = 1e-7;
  int inner_steps = 5;
  ScoreStep score_step = ScoreStep::Orthonormal;

  Index glasso_cv_folds = 5;
  int glasso_path_count = 20;
  double glasso_path_ratio = 0.01;
  double glasso_tol = 1e-4;
  int glasso_max_iter = 200;

  std::string output_dir = "out";
  int threads = 1;

  void validate() const;
};

/// Regime settings on top of the preset dimensions.
inline void apply_regime(ExperimentConfig& cfg, Regime regime) {
  cfg.regime = regime;
  GeneratorConfig& g = cfg.generator;
  g.r = 8;
  g.nuisance_count = 8;
  g.gamma = 16.0;
  g.omega = 0.4;
  if (regime == Regime::Isotropic) {
    g.q_ratio = 0.1;
    g.tau = 0.55;
    g.beta = 1.15;
    g.sigma_E = 1.0;
  } else {
    g.q_ratio = 2.0;
    g.tau = 0.10;
    g.beta = 2.50;
    g.sigma_E = 3.0;
  }
}

/// "paper": p = 144, n = 10000, s = 60. "desk": p = 60, n = 2000, with the
/// spike count scaled to keep s / p (60 * 60 / 144 = 25).
inline void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
  GeneratorConfig& g = cfg.generator;
  if (preset == "paper") {
    g.p = 144;
    g.n = 10000;
    g.s = 60;
  } else if (preset == "desk") {
    g.p = 60;
    g.n = 2000;
    g.s = 25;
  } else {
    fail(ErrorKind::RangeViolation, "preset must be 'desk' or 'paper', got '" + preset + "'");
  }
  cfg.preset = preset;
  cfg.seeds = {0, 1, 2, 3, 4};
}

/// Defaults for settings with no canonical value. Tuned on seeds 100 and
/// 101 with the desk preset; the acceptance sweeps use seeds 0 and up.
inline void apply_model_defaults(ExperimentConfig& cfg) {
  GeneratorConfig& g = cfg.generator;
  g.radius = 1;
  g.sigma1_sq = 400.0;
  g.decay = 0.8;
  if (cfg.regime == Regime::Isotropic) {
    cfg.alpha = 0.05;
    cfg.lambda = 0.5;
  } else {
    cfg.alpha = 0.2;
    cfg.lambda = 10.0;
  }
  // Small enough that SparsePCA stays a lightly sparsified PCA.
  cfg.sparse_alpha = 0.01;
}

inline ExperimentConfig make_config(Regime regime, const std::string& preset = "paper") {
  ExperimentConfig cfg;
  apply_preset(cfg, preset);
  apply_regime(cfg, regime);
  apply_model_defaults(cfg);
  return cfg;
}

inline void ExperimentConfig::validate() const {
  require(!topologies.empty(), ErrorKind::RangeViolation, "at least one topology is required");
  require(!methods.empty(), ErrorKind::RangeViolation, "at least one method is required");
  require(!seeds.empty(), ErrorKind::RangeViolation, "at least one seed is required");
  require(!density_grid.empty(), ErrorKind::RangeViolation, "density_grid must not be empty");
  for (double d : density_grid)
    require(d > 0.0 && d <= 1.0, ErrorKind::RangeViolation, "density_grid entries must lie in (0, 1]");
  require(folds >= 2, ErrorKind::RangeViolation, "folds must be >= 2");
  require(folds <= generator.n, ErrorKind::RangeViolation, "folds must not exceed n");
  require(glasso_cv_folds >= 2, ErrorKind::RangeViolation, "glasso_cv_folds must be >= 2");
  require(alpha > 0.0 && sparse_alpha > 0.0, ErrorKind::RangeViolation, "alpha and sparse_alpha must be > 0");
  require(lambda >= 0.0, ErrorKind::RangeViolation, "lambda must be >= 0");
  require(threads >= 1, ErrorKind::RangeViolation, "threads must be >= 1");
  require(ws_rewire >= 0.0 && ws_rewire <= 1.0, ErrorKind::RangeViolation, "ws_rewire must lie in [0, 1]");
  require(glasso_path_count >= 1 && glasso_path_ratio > 0.0 && glasso_path_ratio <= 1.0, ErrorKind::RangeViolation,
          "glasso path settings out of range");
  try {
    generator.validate();
  } catch (const Error& e) {
    fail(ErrorKind::RangeViolation, e.what());
  }
}

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n'));
}

template <class T>
T get_field(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "preset", "regime", "p", "n", "r", "gamma", "omega", "s", "q_ratio", "tau", "beta", "sigma_E",
      "radius", "sigma1_sq", "decay", "nuisance_count", "ws_rewire", "topologies", "density_grid", "methods",
      "folds", "seeds", "alpha", "lambda", "sparse_alpha", "max_outer", "tol_rel_obj", "inner_steps", "score_step",
      "glasso_cv_folds", "glasso_path_count", "glasso_path_ratio", "glasso_tol", "glasso_max_iter",
      "output_dir", "threads"};
  return keys;
}

/// Builds a config from parsed JSON: preset, then the regime settings, then
/// every explicit key. Unknown keys are rejected.
/// `preset_override` (from the command line) beats the file's "preset".
inline ExperimentConfig config_from_json(const json& j, const std::string& preset_override = "") {
  require(j.is_object(), ErrorKind::ParseError, "config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known_config_keys().count(it.key()) > 0, ErrorKind::UnknownKey, "unknown config key '" + it.key() + "'");

  using detail::get_field;
  const std::string preset = !preset_override.empty() ? preset_override
                             : j.contains("preset")   ? get_field<std::string>(j, "preset")
                                                      : std::string("paper");
  const Regime regime = j.contains("regime") ? parse_regime(get_field<std::string>(j, "regime")) : Regime::Isotropic;
  ExperimentConfig cfg = make_config(regime, preset);
  GeneratorConfig& g = cfg.generator;

  auto set_index = [&](const char* key, Index& dst) {
    if (j.contains(key)) dst = get_field<Index>(j, key);
  };
  auto set_double = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = get_field<double>(j, key);
  };
  auto set_int = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = get_field<int>(j, key);
  };
  set_index("p", g.p);
  set_index("n", g.n);
  set_index("r", g.r);
  set_double("gamma", g.gamma);
  set_double("omega", g.omega);
  set_index("s", g.s);
  if (j.contains("q_ratio")) {
    if (j.at("q_ratio").is_null()) g.q_ratio.reset();
    else g.q_ratio = get_field<double>(j, "q_ratio");
  }
  set_double("tau", g.tau);
  set_double("beta", g.beta);
  set_double("sigma_E", g.sigma_E);
  set_index("radius", g.radius);
  set_double("sigma1_sq", g.sigma1_sq);
  set_double("decay", g.decay);
  set_index("nuisance_count", g.nuisance_count);
  set_double("ws_rewire", cfg.ws_rewire);
  if (j.contains("topologies")) {
    cfg.topologies.clear();
    for (const auto& t : get_field<std::vector<std::string>>(j, "topologies")) {
      try {
        cfg.topologies.push_back(parse_topology(t));
      } catch (const Error& e) {
        fail(ErrorKind::RangeViolation, e.what());
      }
    }
  }
  if (j.contains("density_grid")) cfg.density_grid = get_field<std::vector<double>>(j, "density_grid");
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : get_field<std::vector<std::string>>(j, "methods")) cfg.methods.push_back(parse_arm(m));
  }
  set_index("folds", cfg.folds);
  if (j.contains("seeds")) cfg.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds");
  set_double("alpha", cfg.alpha);
  set_double("sparse_alpha", cfg.sparse_alpha);
  set_double("lambda", cfg.lambda);
  set_int("max_outer", cfg.max_outer);
  set_double("tol_rel_obj", cfg.tol_rel_obj);
  set_int("inner_steps", cfg.inner_steps);
  if (j.contains("score_step")) {
    const auto v = get_field<std::string>(j, "score_step");
    if (v == "orthonormal") cfg.score_step = ScoreStep::Orthonormal;
    else if (v == "least_squares") cfg.score_step = ScoreStep::LeastSquares;
    else fail(ErrorKind::RangeViolation, "score_step must be 'orthonormal' or 'least_squares'");
  }
  set_index("glasso_cv_folds", cfg.glasso_cv_folds);
  set_int("glasso_path_count", cfg.glasso_path_count);
  set_double("glasso_path_ratio", cfg.glasso_path_ratio);
  set_double("glasso_tol", cfg.glasso_tol);
  set_int("glasso_max_iter", cfg.glasso_max_iter);
  if (j.contains("output_dir")) cfg.output_dir = get_field<std::string>(j, "output_dir");
  set_int("threads", cfg.threads);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text, const std::string& preset_override = "") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, "line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  return config_from_json(j, preset_override);
}

inline ExperimentConfig load_config(const fs::path& path, const std::string& preset_override = "") {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), preset_override);
}

/// Fully expanded config (every key), used for manifests and hashing.
inline json config_to_json(const ExperimentConfig& cfg) {
  const GeneratorConfig& g = cfg.generator;
  json j;
  j["preset"] = cfg.preset;
  j["regime"] = to_string(cfg.regime);
  j["p"] = g.p;
  j["n"] = g.n;
  j["r"] = g.r;
  j["gamma"] = g.gamma;
  j["omega"] = g.omega;
  j["s"] = g.s;
  j["q_ratio"] = g.q_ratio ? json(*g.q_ratio) : json(nullptr);
  j["tau"] = g.tau;
  j["beta"] = g.beta;
  j["sigma_E"] = g.sigma_E;
  j["radius"] = g.radius;
  j["sigma1_sq"] = g.sigma1_sq;
  j["decay"] = g.decay;
  j["nuisance_count"] = g.nuisance_count;
  j["ws_rewire"] = cfg.ws_rewire;
  std::vector<std::string> topo, methods;
  for (auto t : cfg.topologies) topo.push_back(to_string(t));
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  j["topologies"] = topo;
  j["density_grid"] = cfg.density_grid;
  j["methods"] = methods;
  j["folds"] = cfg.folds;
  j["seeds"] = cfg.seeds;
  j["alpha"] = cfg.alpha;
  j["lambda"] = cfg.lambda;
  j["sparse_alpha"] = cfg.sparse_alpha;
  j["max_outer"] = cfg.max_outer;
  j["tol_rel_obj"] = cfg.tol_rel_obj;
  j["inner_steps"] = cfg.inner_steps;
  j["score_step"] = to_string(cfg.score_step);
  j["glasso_cv_folds"] = cfg.glasso_cv_folds;
  j["glasso_path_count"] = cfg.glasso_path_count;
  j["glasso_path_ratio"] = cfg.glasso_path_ratio;
  j["glasso_tol"] = cfg.glasso_tol;
  j["glasso_max_iter"] = cfg.glasso_max_iter;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  return j;
}

/// FNV-1a 64 of the expanded config, excluding output location and threads.
inline std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace grpca::harness

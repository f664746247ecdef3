#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "grpca/datagen.hpp"
#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/models.hpp"
#include "grpca/numerics.hpp"
#include "grpca/precision.hpp"

namespace grpca {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Shortest decimal form that round-trips a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline void write_csv(const fs::path& path, const Matrix& m) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_csv(os, m);
}

/// Headerless numeric CSV. Every row must have the same number of fields.
inline Matrix read_csv(std::istream& is, const std::string& label = "csv") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        fail(ErrorKind::ParseError, label + " line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::ParseError, label + " line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

inline Matrix read_csv(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  return read_csv(is, path.string());
}

inline json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << text;
}

/// Externally computed precision matrix (square, symmetric within 1e-8).
inline PrecisionEstimate read_precision_csv(const fs::path& path, double support_threshold = 0.0) {
  Matrix theta = read_csv(path);
  require(theta.rows() > 0 && is_square(theta), ErrorKind::DimensionMismatch, path.string() + ": precision must be square");
  require(is_symmetric(theta, 1e-8), ErrorKind::InvalidArgument, path.string() + ": precision must be symmetric");
  theta = 0.5 * (theta + theta.transpose());
  (void)cholesky(theta);
  PrecisionEstimate out;
  out.theta = std::move(theta);
  out.provenance = Provenance::GlassoFixed;
  out.support_graph = adjacency_from_precision(out.theta, support_threshold);
  return out;
}

inline json topology_json(const TopologyKind& kind) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ErdosRenyi>) return {{"kind", "ER"}, {"edge_prob", k.edge_prob}};
        else if constexpr (std::is_same_v<K, BarabasiAlbert>) return {{"kind", "BA"}, {"attach_m", k.attach_m}};
        else return {{"kind", "WS"}, {"ring_k", k.ring_k}, {"rewire_prob", k.rewire_prob}};
      },
      kind);
}

inline TopologyKind topology_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ER") return ErdosRenyi{j.at("edge_prob").get<double>()};
  if (kind == "BA") return BarabasiAlbert{j.at("attach_m").get<Index>()};
  if (kind == "WS") return WattsStrogatz{j.at("ring_k").get<Index>(), j.at("rewire_prob").get<double>()};
  fail(ErrorKind::ParseError, "unknown topology kind '" + kind + "'");
}

/// meta.json of an exported bundle. Keys are stable; `format` is bumped on
/// any incompatible change.
inline json bundle_meta(const SyntheticBundle& b) {
  const GeneratorConfig& c = b.config;
  json meta;
  meta["format"] = "grpca-bundle/1";
  meta["p"] = c.p;
  meta["n"] = c.n;
  meta["r"] = c.r;
  meta["nuisance_count"] = c.nuisance_count;
  meta["q_ratio"] = c.q_ratio ? json(*c.q_ratio) : json(nullptr);
  meta["gamma"] = c.gamma;
  meta["omega"] = c.omega;
  meta["radius"] = c.radius;
  meta["s"] = c.s;
  meta["sigma1_sq"] = c.sigma1_sq;
  meta["decay"] = c.decay;
  meta["tau"] = c.tau;
  meta["beta"] = c.beta;
  meta["sigma_E"] = c.sigma_E;
  meta["seed"] = b.seed;
  meta["topology"] = topology_json(b.topology);
  meta["achieved_density"] = b.achieved_density;
  meta["edge_count"] = b.graph.edge_count();
  meta["centers"] = b.centers;
  meta["effective_omega"] = b.effective_omega;
  meta["true_variances"] = b.true_variances;
  meta["nuisance_variances"] = b.nuisance_variances;
  meta["column_means"] = std::vector<double>(b.column_means.data(), b.column_means.data() + b.column_means.size());
  meta["column_stds"] = std::vector<double>(b.column_stds.data(), b.column_stds.data() + b.column_stds.size());
  return meta;
}

/// Writes X.csv, V_star.csv, V_nu.csv, edges.txt and meta.json into `dir`.
inline void write_bundle(const fs::path& dir, const SyntheticBundle& b) {
  fs::create_directories(dir);
  write_csv(dir / "X.csv", b.X);
  write_csv(dir / "V_star.csv", b.V_star);
  write_csv(dir / "V_nu.csv", b.V_nu);
  {
    std::ofstream os(dir / "edges.txt");
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write edges.txt");
    write_edge_list(os, b.graph);
  }
  write_text(dir / "meta.json", bundle_meta(b).dump(2) + "\n");
}

/// What an exported bundle carries back in.
struct LoadedBundle {
  Matrix X;
  Matrix V_star;
  Matrix V_nu;
  FeatureGraph graph;
  double tau = 0.0;
  double beta = 0.0;
  json meta;

  Matrix theta_true() const { return noise_precision(graph, tau, beta); }
};

inline LoadedBundle read_bundle(const fs::path& dir) {
  LoadedBundle out;
  out.meta = read_json_file(dir / "meta.json");
  const Index p = out.meta.at("p").get<Index>();
  out.X = read_csv(dir / "X.csv");
  out.V_star = read_csv(dir / "V_star.csv");
  out.V_nu = read_csv(dir / "V_nu.csv");
  if (out.V_nu.size() == 0) out.V_nu = Matrix::Zero(p, 0);
  std::ifstream es(dir / "edges.txt");
  require(static_cast<bool>(es), ErrorKind::Io, "cannot open " + (dir / "edges.txt").string());
  out.graph = read_edge_list(es, p);
  out.tau = out.meta.at("tau").get<double>();
  out.beta = out.meta.at("beta").get<double>();
  require(out.X.cols() == p && out.V_star.rows() == p, ErrorKind::DimensionMismatch, "bundle matrices disagree with meta.p");
  return out;
}

/// U.csv, V.csv and meta.json (method, penalties, trace, convergence).
inline void write_model(const fs::path& dir, const FactorModel& m, json extra = json::object()) {
  fs::create_directories(dir);
  write_csv(dir / "U.csv", m.U);
  write_csv(dir / "V.csv", m.V);
  json meta;
  meta["format"] = "grpca-model/1";
  meta["method"] = to_string(m.method);
  meta["r"] = m.V.cols();
  meta["alpha"] = m.alpha;
  meta["lambda"] = m.lambda;
  if (m.method != Method::Pca) meta["score_step"] = to_string(m.score_step);
  meta["iterations"] = m.iterations;
  meta["converged"] = m.converged;
  meta["all_zero_loadings"] = m.all_zero_loadings;
  meta["objective_trace"] = m.objective_trace;
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace grpca

#pragma once

#include <array>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/io.hpp"
#include "grpca/metrics.hpp"

namespace grpca::harness {

/// One scored fit: a method on one fold of one generated bundle.
///
/// CSV columns, in order:
///   method, regime, topology, density, achieved_density, seed, fold,
///   r2_true, r2_nuis, selectivity, alignment, r2_global, laplacian_energy,
///   iterations, model_converged, precision_converged, support_edges,
///   failed, failure, matching
///
/// `density` is the requested grid value; `achieved_density` the realized
/// edge density. `matching` is "t:e:|cos|" triples joined by ';' (0-based).
/// `support_edges` is -1 for arms without a precision input. Metrics of a
/// failed row are NaN and `failure` holds the error kind and message.
struct MetricsReport {
  std::string method;
  std::string regime;
  std::string topology;
  double density = 0.0;
  double achieved_density = 0.0;
  std::uint64_t seed = 0;
  Index fold = 0;
  double r2_true = 0.0;
  double r2_nuis = 0.0;
  double selectivity = 0.0;
  double alignment = 0.0;
  double r2_global = 0.0;
  double laplacian_energy = 0.0;
  int iterations = 0;
  bool model_converged = false;
  bool precision_converged = true;
  long support_edges = -1;
  bool failed = false;
  std::string failure;
  std::vector<MatchedPair> matching;
};

inline const std::array<const char*, 20>& report_columns() {
  static const std::array<const char*, 20> cols{
      "method",     "regime",      "topology",         "density",    "achieved_density",   "seed",
      "fold",       "r2_true",     "r2_nuis",          "selectivity", "alignment",          "r2_global",
      "laplacian_energy", "iterations", "model_converged", "precision_converged", "support_edges", "failed",
      "failure",    "matching"};
  return cols;
}

/// Method order used for sorting and table layout.
inline int method_rank(const std::string& m) {
  static const std::array<const char*, 4> order{"pca", "sparse_pca", "grpca_oracle", "grpca_learned"};
  for (std::size_t i = 0; i < order.size(); ++i)
    if (m == order[i]) return static_cast<int>(i);
  return static_cast<int>(order.size());
}

inline int topology_rank(const std::string& t) {
  if (t == "ER") return 0;
  if (t == "BA") return 1;
  if (t == "WS") return 2;
  return 3;
}

inline auto sort_key(const MetricsReport& r) {
  return std::make_tuple(method_rank(r.method), r.method, r.regime, topology_rank(r.topology), r.topology, r.density,
                         r.seed, r.fold);
}

inline bool report_less(const MetricsReport& a, const MetricsReport& b) { return sort_key(a) < sort_key(b); }

inline std::string matching_to_string(const std::vector<MatchedPair>& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(m[i].true_idx) + ":" + std::to_string(m[i].est_idx) + ":" + format_double(m[i].similarity);
  }
  return out;
}

inline std::vector<MatchedPair> matching_from_string(const std::string& s) {
  std::vector<MatchedPair> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    MatchedPair p;
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    require(a != std::string::npos && b != std::string::npos, ErrorKind::ParseError, "bad matching entry '" + item + "'");
    p.true_idx = std::stol(item.substr(0, a));
    p.est_idx = std::stol(item.substr(a + 1, b - a - 1));
    p.similarity = std::stod(item.substr(b + 1));
    out.push_back(p);
  }
  return out;
}

namespace detail {

// Quotes a field when it contains a separator, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string num(double v) { return std::isnan(v) ? "nan" : format_double(v); }

inline double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace detail

inline std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < report_columns().size(); ++i) {
    if (i > 0) out += ',';
    out += report_columns()[i];
  }
  return out;
}

inline std::string to_csv_row(const MetricsReport& r) {
  using detail::num;
  std::vector<std::string> f{r.method,
                             r.regime,
                             r.topology,
                             num(r.density),
                             num(r.achieved_density),
                             std::to_string(r.seed),
                             std::to_string(r.fold),
                             num(r.r2_true),
                             num(r.r2_nuis),
                             num(r.selectivity),
                             num(r.alignment),
                             num(r.r2_global),
                             num(r.laplacian_energy),
                             std::to_string(r.iterations),
                             r.model_converged ? "1" : "0",
                             r.precision_converged ? "1" : "0",
                             std::to_string(r.support_edges),
                             r.failed ? "1" : "0",
                             r.failure,
                             matching_to_string(r.matching)};
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i > 0) out += ',';
    out += detail::csv_field(f[i]);
  }
  return out;
}

inline MetricsReport from_csv_row(const std::string& line, std::size_t lineno = 0) {
  const auto f = detail::split_csv_line(line);
  require(f.size() == report_columns().size(), ErrorKind::ParseError,
          "rows.csv line " + std::to_string(lineno) + ": expected " + std::to_string(report_columns().size()) +
              " fields, got " + std::to_string(f.size()));
  MetricsReport r;
  try {
    r.method = f[0];
    r.regime = f[1];
    r.topology = f[2];
    r.density = detail::parse_num(f[3]);
    r.achieved_density = detail::parse_num(f[4]);
    r.seed = std::stoull(f[5]);
    r.fold = std::stol(f[6]);
    r.r2_true = detail::parse_num(f[7]);
    r.r2_nuis = detail::parse_num(f[8]);
    r.selectivity = detail::parse_num(f[9]);
    r.alignment = detail::parse_num(f[10]);
    r.r2_global = detail::parse_num(f[11]);
    r.laplacian_energy = detail::parse_num(f[12]);
    r.iterations = std::stoi(f[13]);
    r.model_converged = f[14] == "1";
    r.precision_converged = f[15] == "1";
    r.support_edges = std::stol(f[16]);
    r.failed = f[17] == "1";
    r.failure = f[18];
    r.matching = matching_from_string(f[19]);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::ParseError, "rows.csv line " + std::to_string(lineno) + ": " + e.what());
  }
  return r;
}

inline json to_json(const MetricsReport& r) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json j;
  j["method"] = r.method;
  j["regime"] = r.regime;
  j["topology"] = r.topology;
  j["density"] = r.density;
  j["achieved_density"] = r.achieved_density;
  j["seed"] = r.seed;
  j["fold"] = r.fold;
  j["r2_true"] = num(r.r2_true);
  j["r2_nuis"] = num(r.r2_nuis);
  j["selectivity"] = num(r.selectivity);
  j["alignment"] = num(r.alignment);
  j["r2_global"] = num(r.r2_global);
  j["laplacian_energy"] = num(r.laplacian_energy);
  j["iterations"] = r.iterations;
  j["model_converged"] = r.model_converged;
  j["precision_converged"] = r.precision_converged;
  j["support_edges"] = r.support_edges;
  j["failed"] = r.failed;
  j["failure"] = r.failure;
  json m = json::array();
  for (const auto& p : r.matching) m.push_back({{"true_idx", p.true_idx}, {"est_idx", p.est_idx}, {"similarity", p.similarity}});
  j["matching"] = m;
  return j;
}

inline void write_rows_csv(std::ostream& os, const std::vector<MetricsReport>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) os << to_csv_row(r) << '\n';
}

inline std::vector<MetricsReport> read_rows_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::ParseError, "rows.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == csv_header(), ErrorKind::ParseError, "rows.csv header does not match the report columns");
  std::vector<MetricsReport> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    rows.push_back(from_csv_row(line, lineno));
  }
  return rows;
}

inline std::vector<MetricsReport> read_rows_csv(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  return read_rows_csv(is);
}

}  // namespace grpca::harness

#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/harness/report.hpp"

namespace grpca::harness {

enum class Metric { Selectivity, Alignment, R2Global, R2True, R2Nuis, LaplacianEnergy };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::Selectivity: return "selectivity";
    case Metric::Alignment: return "alignment";
    case Metric::R2Global: return "r2_global";
    case Metric::R2True: return "r2_true";
    case Metric::R2Nuis: return "r2_nuis";
    case Metric::LaplacianEnergy: return "laplacian_energy";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  for (Metric m : {Metric::Selectivity, Metric::Alignment, Metric::R2Global, Metric::R2True, Metric::R2Nuis,
                   Metric::LaplacianEnergy})
    if (s == to_string(m)) return m;
  if (s == "r2") return Metric::R2Global;
  fail(ErrorKind::RangeViolation, "unknown metric '" + s + "'");
}

inline double metric_value(const MetricsReport& r, Metric m) {
  switch (m) {
    case Metric::Selectivity: return r.selectivity;
    case Metric::Alignment: return r.alignment;
    case Metric::R2Global: return r.r2_global;
    case Metric::R2True: return r.r2_true;
    case Metric::R2Nuis: return r.r2_nuis;
    case Metric::LaplacianEnergy: return r.laplacian_energy;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();  // sample std (n - 1); NaN when n < 2
};

/// Group of rows sharing (method, regime, topology[, density]). Failed rows
/// are only counted in `attrition`.
struct Aggregate {
  std::string method;
  std::string regime;
  std::string topology;
  double density = std::numeric_limits<double>::quiet_NaN();  // NaN: averaged over densities
  long count = 0;
  long attrition = 0;
  double mean_achieved_density = std::numeric_limits<double>::quiet_NaN();
  std::map<Metric, Summary> stats;

  double mean(Metric m) const {
    const auto it = stats.find(m);
    return it == stats.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.mean;
  }
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline const std::vector<Metric>& aggregated_metrics() {
  static const std::vector<Metric> ms{Metric::Selectivity, Metric::Alignment, Metric::R2Global,
                                      Metric::R2True,      Metric::R2Nuis,    Metric::LaplacianEnergy};
  return ms;
}

/// Means and standard deviations per (method, regime, topology), or per
/// (method, regime, topology, density) when `by_density` is set.
inline std::vector<Aggregate> aggregate(const std::vector<MetricsReport>& rows, bool by_density) {
  using Key = std::tuple<int, std::string, std::string, int, std::string, double>;
  std::map<Key, std::vector<const MetricsReport*>> groups;
  for (const auto& r : rows) {
    const double d = by_density ? r.density : 0.0;
    groups[{method_rank(r.method), r.method, r.regime, topology_rank(r.topology), r.topology, d}].push_back(&r);
  }
  std::vector<Aggregate> out;
  for (const auto& [key, members] : groups) {
    Aggregate a;
    a.method = std::get<1>(key);
    a.regime = std::get<2>(key);
    a.topology = std::get<4>(key);
    if (by_density) a.density = std::get<5>(key);
    std::vector<double> achieved;
    std::map<Metric, std::vector<double>> vals;
    for (const MetricsReport* r : members) {
      if (r->failed) {
        ++a.attrition;
        continue;
      }
      ++a.count;
      achieved.push_back(r->achieved_density);
      for (Metric m : aggregated_metrics()) vals[m].push_back(metric_value(*r, m));
    }
    a.mean_achieved_density = summarize(achieved).mean;
    for (Metric m : aggregated_metrics()) a.stats[m] = summarize(vals[m]);
    out.push_back(std::move(a));
  }
  return out;
}

struct SweepResult {
  std::vector<MetricsReport> rows;
  std::vector<Aggregate> by_cell;
  std::vector<Aggregate> by_density;
};

inline SweepResult make_result(std::vector<MetricsReport> rows) {
  SweepResult out;
  out.rows = std::move(rows);
  out.by_cell = aggregate(out.rows, false);
  out.by_density = aggregate(out.rows, true);
  return out;
}

/// One results table: rows are methods, columns are (regime, topology),
/// cells are density-averaged means.
struct MetricTable {
  Metric metric = Metric::Selectivity;
  std::vector<Aggregate> cells;
};

struct Tables {
  MetricTable selectivity;
  MetricTable alignment;
  MetricTable r2;
};

inline Tables aggregate_tables(const SweepResult& result) {
  require(!result.rows.empty(), ErrorKind::InsufficientData, "aggregate_tables: no rows");
  Tables t;
  t.selectivity = {Metric::Selectivity, result.by_cell};
  t.alignment = {Metric::Alignment, result.by_cell};
  t.r2 = {Metric::R2Global, result.by_cell};
  return t;
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace detail

/// Long format: method,regime,topology,mean,std,n,attrition.
inline std::string render_csv(const MetricTable& t) {
  std::string out = "method,regime,topology,mean,std,n,attrition\n";
  for (const auto& a : t.cells) {
    const Summary s = a.stats.count(t.metric) ? a.stats.at(t.metric) : Summary{};
    out += a.method + "," + a.regime + "," + a.topology + "," + detail::num(s.mean) + "," + detail::num(s.std) + "," +
           std::to_string(a.count) + "," + std::to_string(a.attrition) + "\n";
  }
  return out;
}

/// Wide aligned text: one line per method, one column per regime/topology,
/// followed by an attrition block when any row failed.
inline std::string render_text(const MetricTable& t) {
  std::vector<std::string> methods;
  std::vector<std::pair<std::string, std::string>> cols;
  std::map<std::tuple<std::string, std::string, std::string>, const Aggregate*> cell;
  auto add_unique = [](auto& v, const auto& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  for (const auto& a : t.cells) {
    add_unique(methods, a.method);
    add_unique(cols, std::make_pair(a.regime, a.topology));
    cell[{a.method, a.regime, a.topology}] = &a;
  }
  std::sort(cols.begin(), cols.end(), [](const auto& x, const auto& y) {
    return std::make_tuple(x.first, topology_rank(x.second)) < std::make_tuple(y.first, topology_rank(y.second));
  });

  std::size_t w0 = 6;
  for (const auto& m : methods) w0 = std::max(w0, m.size());
  const std::size_t wc = 13;
  std::ostringstream os;
  os << "mean out-of-sample " << to_string(t.metric) << "\n";
  os << std::left << std::setw(static_cast<int>(w0)) << "method";
  for (const auto& c : cols) os << std::right << std::setw(static_cast<int>(wc)) << (c.first.substr(0, 5) + "/" + c.second);
  os << "\n";
  bool any_attrition = false;
  for (const auto& m : methods) {
    os << std::left << std::setw(static_cast<int>(w0)) << m;
    for (const auto& c : cols) {
      const auto it = cell.find({m, c.first, c.second});
      const double v = it == cell.end() ? std::numeric_limits<double>::quiet_NaN() : it->second->mean(t.metric);
      if (it != cell.end() && it->second->attrition > 0) any_attrition = true;
      os << std::right << std::setw(static_cast<int>(wc)) << detail::fixed(v);
    }
    os << "\n";
  }
  if (any_attrition) {
    os << "attrition (failed rows excluded from means)\n";
    for (const auto& m : methods) {
      os << std::left << std::setw(static_cast<int>(w0)) << m;
      for (const auto& c : cols) {
        const auto it = cell.find({m, c.first, c.second});
        os << std::right << std::setw(static_cast<int>(wc)) << (it == cell.end() ? std::string("-") : std::to_string(it->second->attrition));
      }
      os << "\n";
    }
  }
  return os.str();
}

/// Per-density aggregates in long format, the data behind the plots.
inline std::string render_density_csv(const std::vector<Aggregate>& by_density) {
  std::string out = "method,regime,topology,density,achieved_density,n,attrition";
  for (Metric m : aggregated_metrics()) out += "," + to_string(m) + "_mean," + to_string(m) + "_std";
  out += "\n";
  for (const auto& a : by_density) {
    out += a.method + "," + a.regime + "," + a.topology + "," + detail::num(a.density) + "," +
           detail::num(a.mean_achieved_density) + "," + std::to_string(a.count) + "," + std::to_string(a.attrition);
    for (Metric m : aggregated_metrics()) out += "," + detail::num(a.stats.at(m).mean) + "," + detail::num(a.stats.at(m).std);
    out += "\n";
  }
  return out;
}

}  // namespace grpca::harness

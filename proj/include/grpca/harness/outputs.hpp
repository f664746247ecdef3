#pragma once

#include <Eigen/Core>
#include <fstream>
#include <sstream>
#include <string>

#include "grpca/harness/config.hpp"
#include "grpca/harness/plot.hpp"
#include "grpca/harness/report.hpp"
#include "grpca/harness/tables.hpp"
#include "grpca/io.hpp"
#include "grpca/version.hpp"

namespace grpca::harness {

inline json attrition_json(const SweepResult& r) {
  json out = json::array();
  for (const auto& a : r.by_cell)
    out.push_back({{"method", a.method}, {"regime", a.regime}, {"topology", a.topology}, {"scored", a.count},
                   {"failed", a.attrition}});
  return out;
}

inline std::string rows_csv_text(const std::vector<MetricsReport>& rows) {
  std::ostringstream os;
  write_rows_csv(os, rows);
  return os.str();
}

/// tables_*.csv/.txt, density_means.csv and plots/*.svg from a result.
/// Plots are skipped (and listed in the return value) when fewer than two
/// densities carry data.
inline std::vector<std::string> write_tables_and_plots(const fs::path& dir, const SweepResult& result) {
  const Tables t = aggregate_tables(result);
  const std::pair<const char*, const MetricTable*> named[] = {
      {"selectivity", &t.selectivity}, {"alignment", &t.alignment}, {"r2", &t.r2}};
  for (const auto& [name, table] : named) {
    write_text(dir / (std::string("tables_") + name + ".csv"), render_csv(*table));
    write_text(dir / (std::string("tables_") + name + ".txt"), render_text(*table));
  }
  write_text(dir / "density_means.csv", render_density_csv(result.by_density));
  std::vector<std::string> skipped;
  fs::create_directories(dir / "plots");
  for (Metric m : {Metric::Selectivity, Metric::Alignment, Metric::R2Global}) {
    try {
      write_text(dir / "plots" / (to_string(m) + "_vs_density.svg"), emit_density_plot(result, m));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
      skipped.push_back(to_string(m));
    }
  }
  return skipped;
}

/// Everything a run produces: rows.csv, tables, plots and manifest.json.
inline void write_outputs(const fs::path& dir, const ExperimentConfig& cfg, const SweepResult& result) {
  fs::create_directories(dir);
  write_text(dir / "rows.csv", rows_csv_text(result.rows));
  const auto skipped = write_tables_and_plots(dir, result);
  json manifest;
  manifest["format"] = "grpca-run/1";
  manifest["config_hash"] = config_hash(cfg);
  manifest["versions"] = {{"grpca", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  manifest["config"] = config_to_json(cfg);
  manifest["row_count"] = result.rows.size();
  manifest["attrition"] = attrition_json(result);
  manifest["plots_skipped"] = skipped;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace grpca::harness

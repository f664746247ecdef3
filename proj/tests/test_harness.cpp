#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <regex>
#include <sstream>

#include "grpca/harness/config.hpp"
#include "grpca/harness/experiment.hpp"
#include "grpca/harness/outputs.hpp"
#include "grpca/harness/plot.hpp"
#include "grpca/harness/tables.hpp"

using namespace grpca;
using namespace grpca::harness;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::Io;
}

ExperimentConfig tiny(Regime regime = Regime::Anisotropic) {
  ExperimentConfig c = make_config(regime, "desk");
  c.generator.p = 30;
  c.generator.n = 240;
  c.generator.s = 10;
  c.topologies = {Topology::ER};
  c.density_grid = {0.2};
  c.seeds = {1};
  c.folds = 2;
  c.methods = {Arm::Pca};
  c.max_outer = 100;
  return c;
}

MetricsReport row(const std::string& method, const std::string& topo, double density, double sel, bool failed = false) {
  MetricsReport r;
  r.method = method;
  r.regime = "anisotropic";
  r.topology = topo;
  r.density = density;
  r.achieved_density = density;
  r.selectivity = sel;
  r.alignment = 0.5;
  r.r2_global = 0.8;
  if (failed) {
    r.failed = true;
    r.failure = "NoConvergence: test";
    r.selectivity = r.alignment = r.r2_global = r.r2_true = r.r2_nuis = r.laplacian_energy =
        std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<std::vector<double>> polyline_points(const std::string& svg) {
  std::vector<std::vector<double>> out;
  const std::regex re("<polyline[^>]* points=\"([^\"]*)\"");
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    std::vector<double> ys;
    std::istringstream ss((*it)[1].str());
    std::string pair;
    while (ss >> pair) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
    out.push_back(ys);
  }
  return out;
}

}  // namespace

TEST(Config, AnisotropicRegimeFillsGeneratorSettings) {
  const ExperimentConfig c = parse_config(R"({"regime":"anisotropic"})");
  EXPECT_EQ(c.regime, Regime::Anisotropic);
  EXPECT_DOUBLE_EQ(c.generator.tau, 0.10);
  EXPECT_DOUBLE_EQ(c.generator.beta, 2.50);
  EXPECT_DOUBLE_EQ(c.generator.sigma_E, 3.0);
  EXPECT_DOUBLE_EQ(*c.generator.q_ratio, 2.0);
  EXPECT_EQ(c.generator.p, 144);
  EXPECT_EQ(c.generator.n, 10000);
  EXPECT_EQ(c.generator.r, 8);
  EXPECT_EQ(c.generator.s, 60);
  EXPECT_DOUBLE_EQ(c.generator.gamma, 16.0);
  EXPECT_DOUBLE_EQ(c.generator.omega, 0.4);
}

TEST(Config, IsotropicColumnWithOverride) {
  const ExperimentConfig c = parse_config(R"({"regime":"isotropic","tau":0.6})");
  EXPECT_DOUBLE_EQ(c.generator.tau, 0.6);
  EXPECT_DOUBLE_EQ(c.generator.beta, 1.15);
  EXPECT_DOUBLE_EQ(c.generator.sigma_E, 1.0);
  EXPECT_DOUBLE_EQ(*c.generator.q_ratio, 0.1);
}

TEST(Config, DeskPreset) {
  const ExperimentConfig c = parse_config(R"({"preset":"desk"})");
  EXPECT_EQ(c.generator.p, 60);
  EXPECT_EQ(c.generator.n, 2000);
  EXPECT_EQ(parse_config("{}", "desk").generator.p, 60);
}

TEST(Config, Errors) {
  EXPECT_EQ(kind_of([] { parse_config(R"({"folds":1})"); }), ErrorKind::RangeViolation);
  EXPECT_EQ(kind_of([] { parse_config(R"({"fold":3})"); }), ErrorKind::UnknownKey);
  EXPECT_EQ(kind_of([] { parse_config(R"({"methods":["svd"]})"); }), ErrorKind::RangeViolation);
  EXPECT_EQ(kind_of([] { parse_config(R"({"density_grid":[0.0]})"); }), ErrorKind::RangeViolation);
  EXPECT_EQ(kind_of([] { parse_config(R"({"preset":"laptop"})"); }), ErrorKind::RangeViolation);
  try {
    parse_config("{\n  \"folds\": 3,\n  \"seeds\": [1,\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Config, RoundTripAndHash) {
  const ExperimentConfig c = parse_config(R"({"regime":"anisotropic","preset":"desk","alpha":0.3,"seeds":[7,8]})");
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  ExperimentConfig d = c;
  d.output_dir = "elsewhere";
  d.threads = 4;
  EXPECT_EQ(config_hash(d), config_hash(c));
  d.lambda += 1.0;
  EXPECT_NE(config_hash(d), config_hash(c));
}

TEST(Sweep, MinimalConfigGivesOneRowPerFold) {
  const auto rows = run_experiment(tiny());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].fold, 0);
  EXPECT_EQ(rows[1].fold, 1);
  const SweepResult res = make_result(rows);
  ASSERT_EQ(res.by_cell.size(), 1u);
  EXPECT_NEAR(res.by_cell[0].mean(Metric::Selectivity), 0.5 * (rows[0].selectivity + rows[1].selectivity), 1e-15);
  EXPECT_EQ(res.by_cell[0].count, 2);
}

TEST(Sweep, RowsAreDeterministicAcrossRunsAndThreads) {
  ExperimentConfig c = tiny();
  c.topologies = {Topology::ER, Topology::BA};
  c.seeds = {1, 2};
  c.methods = {Arm::Pca, Arm::SparsePca, Arm::GrpcaOracle};
  c.threads = 1;
  const std::string a = rows_csv_text(run_experiment(c));
  const std::string b = rows_csv_text(run_experiment(c));
  c.threads = 3;
  const std::string t = rows_csv_text(run_experiment(c));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, t);
}

TEST(Sweep, PointSeedsDependOnPointOnly) {
  EXPECT_EQ(point_seed(3, Topology::ER, 0.1), point_seed(3, Topology::ER, 0.1));
  EXPECT_NE(point_seed(3, Topology::ER, 0.1), point_seed(3, Topology::BA, 0.1));
  EXPECT_NE(point_seed(3, Topology::ER, 0.1), point_seed(3, Topology::ER, 0.2));
  EXPECT_NE(point_seed(3, Topology::ER, 0.1), point_seed(4, Topology::ER, 0.1));
}

TEST(Sweep, FoldsStandardizeWithTrainingStatistics) {
  RandomSource rs(3);
  const Matrix x = standard_normal(rs, 50, 4) * 2.0 + Matrix::Constant(50, 4, 1.0);
  const auto folds = make_folds(x, 5);
  ASSERT_EQ(folds.size(), 5u);
  Index covered = 0;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train.rows() + f.test.rows(), 50);
    covered += f.test.rows();
    EXPECT_LT(f.train.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
    const Matrix raw_test = x.middleRows(f.fold * 10, 10);
    const Matrix expected = (raw_test.rowwise() - f.scaler.means.transpose()).array().rowwise() /
                            f.scaler.stds.transpose().array();
    EXPECT_LT((f.test - expected).cwiseAbs().maxCoeff(), 1e-14);
    // Test statistics never leak: the test fold is not centred on its own mean.
    EXPECT_GT(f.test.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
  }
  EXPECT_EQ(covered, 50);
}

TEST(Sweep, OracleInjectedIntoLearnedPathMatchesOracleArm) {
  ExperimentConfig c = tiny();
  c.methods = {Arm::GrpcaOracle, Arm::GrpcaLearned};
  ExperimentHooks hooks;
  hooks.learned_precision = [](const Matrix&, const SyntheticBundle& b) { return oracle_precision(b.theta_true); };
  const auto rows = run_experiment(c, hooks);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& o : rows) {
    if (o.method != "grpca_oracle") continue;
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [&](const MetricsReport& r) { return r.method == "grpca_learned" && r.fold == o.fold; });
    ASSERT_NE(it, rows.end());
    const MetricsReport& l = *it;
    ASSERT_FALSE(o.failed);
    ASSERT_FALSE(l.failed);
    EXPECT_EQ(o.selectivity, l.selectivity);
    EXPECT_EQ(o.alignment, l.alignment);
    EXPECT_EQ(o.support_edges, l.support_edges);
  }
}

TEST(Sweep, GenerationFailureBecomesFailureRows) {
  ExperimentConfig c = tiny();
  c.density_grid = {1.0};  // complete graph: no sub-maximal-degree nodes
  c.methods = {Arm::Pca, Arm::GrpcaOracle};
  const auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.failed);
    EXPECT_NE(r.failure.find("InsufficientBoundary"), std::string::npos);
    EXPECT_TRUE(std::isnan(r.selectivity));
  }
  const SweepResult res = make_result(rows);
  for (const auto& a : res.by_cell) {
    EXPECT_EQ(a.count, 0);
    EXPECT_EQ(a.attrition, 2);
  }
}

TEST(Sweep, LearnedArmRecordsGlassoDegradationAtHighDensity) {
  ExperimentConfig c = tiny();
  c.density_grid = {0.9};
  c.methods = {Arm::GrpcaLearned};
  c.glasso_max_iter = 3;
  const auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    // Either a scored row whose precision flag records non-convergence, or a
    // failure row; never an exception out of the sweep.
    if (!r.failed) EXPECT_GE(r.support_edges, 0);
    else EXPECT_FALSE(r.failure.empty());
  }
}

TEST(Tables, HandBuiltMeansAndAttrition) {
  std::vector<MetricsReport> rows{row("pca", "ER", 0.1, 0.1), row("pca", "ER", 0.2, 0.3), row("pca", "ER", 0.1, 0.2),
                                  row("pca", "ER", 0.2, 0.6), row("pca", "ER", 0.2, 0.0, true)};
  const SweepResult res = make_result(rows);
  const Tables t = aggregate_tables(res);
  ASSERT_EQ(t.selectivity.cells.size(), 1u);
  const Aggregate& a = t.selectivity.cells[0];
  EXPECT_NEAR(a.mean(Metric::Selectivity), 0.3, 1e-15);
  EXPECT_EQ(a.count, 4);
  EXPECT_EQ(a.attrition, 1);
  // Sample std of (0.1, 0.3, 0.2, 0.6) = sqrt(0.14 / 3).
  EXPECT_NEAR(a.stats.at(Metric::Selectivity).std, std::sqrt(0.14 / 3.0), 1e-15);
  ASSERT_EQ(res.by_density.size(), 2u);
  EXPECT_NEAR(res.by_density[0].mean(Metric::Selectivity), 0.15, 1e-15);
  EXPECT_NEAR(res.by_density[1].mean(Metric::Selectivity), 0.45, 1e-15);
  EXPECT_EQ(res.by_density[1].attrition, 1);
  const std::string csv = render_csv(t.selectivity);
  EXPECT_NE(csv.find("pca,anisotropic,ER,0.3"), std::string::npos) << csv;
  EXPECT_NE(render_text(t.selectivity).find("attrition"), std::string::npos);
  EXPECT_EQ(kind_of([] { aggregate_tables(SweepResult{}); }), ErrorKind::InsufficientData);
}

TEST(Tables, OneMethodOneTopologyIsOneCell) {
  const SweepResult res = make_result({row("grpca_oracle", "BA", 0.1, 0.2)});
  EXPECT_EQ(aggregate_tables(res).alignment.cells.size(), 1u);
}

TEST(Plot, TwoDensitiesGiveOneTwoPointLine) {
  const SweepResult res = make_result({row("pca", "ER", 0.1, 0.1), row("pca", "ER", 0.3, 0.2)});
  const std::string svg = emit_density_plot(res, Metric::Selectivity);
  const auto lines = polyline_points(svg);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].size(), 2u);
  EXPECT_NE(svg.find("data-topology=\"ER\""), std::string::npos);
}

TEST(Plot, MonotoneValuesGiveMonotoneOrdinates) {
  std::vector<MetricsReport> rows;
  const std::vector<double> ds{0.05, 0.1, 0.2, 0.3, 0.5};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    rows.push_back(row("pca", "ER", ds[i], 0.1 * static_cast<double>(i)));
    rows.push_back(row("pca", "BA", ds[i], -0.05 * static_cast<double>(i)));
  }
  const auto lines = polyline_points(emit_density_plot(make_result(rows), Metric::Selectivity));
  ASSERT_EQ(lines.size(), 2u);
  // SVG y grows downwards: increasing values give decreasing ordinates.
  for (const auto& ys : lines) {
    ASSERT_EQ(ys.size(), ds.size());
    const bool up = ys.front() > ys.back();
    for (std::size_t i = 1; i < ys.size(); ++i) EXPECT_TRUE(up ? ys[i] < ys[i - 1] : ys[i] > ys[i - 1]);
  }
}

TEST(Plot, EmptyMetricIsInsufficientData) {
  const SweepResult res = make_result({row("pca", "ER", 0.1, 0.0, true), row("pca", "ER", 0.2, 0.0, true)});
  EXPECT_EQ(kind_of([&] { emit_density_plot(res, Metric::Alignment); }), ErrorKind::InsufficientData);
}

TEST(Report, CsvRoundTrip) {
  MetricsReport r = row("grpca_learned", "WS", 0.2, 0.123456789012345);
  r.fold = 3;
  r.seed = 17;
  r.support_edges = 42;
  r.matching = {{0, 1, 0.5}, {1, 0, 0.25}};
  r.failure = "has, comma \"quoted\"";
  const MetricsReport f = row("pca", "ER", 0.1, 0.0, true);
  std::stringstream ss;
  write_rows_csv(ss, {r, f});
  const auto back = read_rows_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].selectivity, r.selectivity);
  EXPECT_EQ(back[0].failure, r.failure);
  EXPECT_EQ(back[0].support_edges, 42);
  ASSERT_EQ(back[0].matching.size(), 2u);
  EXPECT_EQ(back[0].matching[1].est_idx, 0);
  EXPECT_TRUE(back[1].failed);
  EXPECT_TRUE(std::isnan(back[1].selectivity));
  std::stringstream bad("nope\n");
  EXPECT_THROW(read_rows_csv(bad), Error);
}

TEST(Outputs, WritesRunDirectory) {
  ExperimentConfig c = tiny();
  c.density_grid = {0.1, 0.2};
  const fs::path dir = fs::temp_directory_path() / "grpca_test_outputs";
  fs::remove_all(dir);
  const SweepResult res = make_result(run_experiment(c));
  write_outputs(dir, c, res);
  for (const char* f : {"rows.csv", "manifest.json", "tables_selectivity.csv", "tables_alignment.txt", "tables_r2.csv",
                        "density_means.csv", "plots/selectivity_vs_density.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const json m = read_json_file(dir / "manifest.json");
  EXPECT_EQ(m.at("config_hash").get<std::string>(), config_hash(c));
  EXPECT_EQ(m.at("row_count").get<std::size_t>(), res.rows.size());
  EXPECT_EQ(read_rows_csv(dir / "rows.csv").size(), res.rows.size());
  fs::remove_all(dir);
}

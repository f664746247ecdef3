// grpca: sweeps, tables, plots, dataset export and single fits.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "grpca/grpca.hpp"
#include "grpca/harness/config.hpp"
#include "grpca/harness/experiment.hpp"
#include "grpca/harness/outputs.hpp"
#include "grpca/harness/plot.hpp"
#include "grpca/harness/tables.hpp"

namespace {

using namespace grpca;
using namespace grpca::harness;

std::string density_tag(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", d);
  return buf;
}

int cmd_run(const std::string& config_path, const std::string& out, int threads, const std::string& preset) {
  ExperimentConfig cfg = load_config(config_path, preset);
  if (!out.empty()) cfg.output_dir = out;
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  std::cerr << "grpca run: " << to_string(cfg.regime) << ", preset " << cfg.preset << ", p=" << cfg.generator.p
            << ", n=" << cfg.generator.n << ", " << sweep_points(cfg).size() << " sweep points, " << cfg.threads
            << " thread(s)\n";
  auto rows = run_experiment(cfg, {}, [](std::size_t done, std::size_t total) {
    std::cerr << "  [" << done << "/" << total << "]\r" << std::flush;
  });
  std::cerr << "\n";
  const SweepResult result = make_result(std::move(rows));
  write_outputs(cfg.output_dir, cfg, result);
  const Tables t = aggregate_tables(result);
  std::cout << render_text(t.selectivity) << "\n" << render_text(t.alignment) << "\n" << render_text(t.r2);
  std::cerr << "wrote " << result.rows.size() << " rows to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_tables(const std::string& in) {
  const SweepResult result = make_result(read_rows_csv(fs::path(in) / "rows.csv"));
  (void)write_tables_and_plots(in, result);
  const Tables t = aggregate_tables(result);
  std::cout << render_text(t.selectivity) << "\n" << render_text(t.alignment) << "\n" << render_text(t.r2);
  return 0;
}

int cmd_plot(const std::string& in, const std::string& metric_name) {
  const Metric metric = parse_metric(metric_name);
  const SweepResult result = make_result(read_rows_csv(fs::path(in) / "rows.csv"));
  fs::create_directories(fs::path(in) / "plots");
  const fs::path path = fs::path(in) / "plots" / (to_string(metric) + "_vs_density.svg");
  write_text(path, emit_density_plot(result, metric));
  std::cout << path.string() << "\n";
  return 0;
}

int cmd_gen(const std::string& config_path, const std::string& out, const std::string& preset,
            const std::vector<std::string>& topo_filter, const std::vector<double>& density_filter,
            const std::vector<std::uint64_t>& seed_filter) {
  ExperimentConfig cfg = load_config(config_path, preset);
  if (!out.empty()) cfg.output_dir = out;
  if (!topo_filter.empty()) {
    cfg.topologies.clear();
    for (const auto& t : topo_filter) cfg.topologies.push_back(parse_topology(t));
  }
  if (!density_filter.empty()) cfg.density_grid = density_filter;
  if (!seed_filter.empty()) cfg.seeds = seed_filter;
  cfg.validate();
  for (const SweepPoint& pt : sweep_points(cfg)) {
    GeneratorConfig g = cfg.generator;
    g.seed = point_seed(pt.seed, pt.topology, pt.density);
    const SyntheticBundle b = generate_bundle(density_to_params(pt.topology, g.p, pt.density, cfg.ws_rewire), g);
    const fs::path dir = fs::path(cfg.output_dir) /
                         (to_string(pt.topology) + "_d" + density_tag(pt.density) + "_s" + std::to_string(pt.seed));
    write_bundle(dir, b);
    json meta = read_json_file(dir / "meta.json");
    meta["regime"] = to_string(cfg.regime);
    meta["preset"] = cfg.preset;
    meta["sweep_seed"] = pt.seed;
    meta["requested_density"] = pt.density;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    std::cout << dir.string() << "  density " << density_tag(b.achieved_density) << "\n";
  }
  return 0;
}

struct FitOptions {
  std::string data;
  std::string method = "grpca";
  std::string graph = "edges";
  std::string precision_file;
  std::string out;
  std::optional<double> alpha;
  std::optional<double> lambda;
  Index r = 0;
};

int cmd_fit(const FitOptions& o) {
  const LoadedBundle b = read_bundle(o.data);
  Regime regime = Regime::Isotropic;
  if (b.meta.contains("regime")) regime = parse_regime(b.meta.at("regime").get<std::string>());
  const ExperimentConfig defaults = make_config(regime, "paper");
  ExperimentConfig cfg = defaults;
  cfg.generator.r = o.r > 0 ? o.r : b.meta.at("r").get<Index>();
  cfg.alpha = o.alpha.value_or(defaults.alpha);
  cfg.sparse_alpha = o.alpha.value_or(defaults.sparse_alpha);
  cfg.lambda = o.lambda.value_or(defaults.lambda);
  const Index n = b.X.rows();

  FactorModel model;
  json extra;
  if (o.method == "pca") {
    model = fit_pca(b.X, cfg.generator.r);
  } else if (o.method == "sparse_pca") {
    model = fit_sparse_pca(b.X, cfg.generator.r, cfg.sparse_alpha * static_cast<double>(n),
                           solver_config(cfg, n, cfg.sparse_alpha, 0.0));
  } else if (o.method == "grpca") {
    PrecisionEstimate est;
    if (o.graph == "edges") {
      est.support_graph = b.graph;
      est.provenance = Provenance::Oracle;
    } else if (o.graph == "oracle") {
      est = oracle_precision(b.theta_true());
    } else if (o.graph == "learn") {
      est = learn_precision(b.X, cfg);
      extra["glasso_penalty"] = est.penalty;
      extra["glasso_converged"] = est.diagnostics.converged;
    } else if (o.graph == "file") {
      require(!o.precision_file.empty(), ErrorKind::InvalidArgument, "--graph file needs --precision");
      est = read_precision_csv(o.precision_file, kLearnedSupportThreshold);
    } else {
      fail(ErrorKind::InvalidArgument, "--graph must be edges, oracle, learn or file");
    }
    extra["graph"] = o.graph;
    extra["support_edges"] = est.support_graph.edge_count();
    model = fit_grpca(b.X, est.support_graph, solver_config(cfg, n, cfg.alpha, cfg.lambda));
  } else {
    fail(ErrorKind::InvalidArgument, "--method must be pca, sparse_pca or grpca");
  }

  // In-sample scores against the bundle's ground truth.
  const Matrix xhat = reconstruct(model, b.X);
  const Selectivity sel = selectivity(b.X, xhat, b.V_star, b.V_nu);
  const Alignment al = alignment(model.V, b.V_star);
  extra["alpha_per_sample"] = o.method == "pca" ? 0.0 : (o.method == "sparse_pca" ? cfg.sparse_alpha : cfg.alpha);
  extra["lambda_per_sample"] = o.method == "grpca" ? cfg.lambda : 0.0;
  extra["in_sample"] = {{"r2_true", sel.r2_true},
                        {"r2_nuis", sel.r2_nuis},
                        {"selectivity", sel.delta},
                        {"alignment", al.score},
                        {"r2_global", r2_global(b.X, xhat)}};
  const fs::path out = o.out.empty() ? fs::path(o.data) / ("model_" + o.method) : fs::path(o.out);
  write_model(out, model, extra);
  std::cout << "method " << o.method << "  iterations " << model.iterations << "  converged "
            << (model.converged ? "yes" : "no") << "\n"
            << "in-sample selectivity " << sel.delta << "  alignment " << al.score << "  r2_global "
            << extra["in_sample"]["r2_global"].get<double>() << "\n"
            << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized PCA experiments"};
  app.require_subcommand(1);

  std::string config, out, preset, in, metric = "selectivity";
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run a topology x density x seed sweep");
  run->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));

  auto* tables = app.add_subcommand("tables", "Rebuild tables and plots from rows.csv");
  tables->add_option("--in", in, "Run directory")->required()->check(CLI::ExistingDirectory);

  auto* plot = app.add_subcommand("plot", "Emit a metric-vs-density SVG");
  plot->add_option("--in", in, "Run directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--metric", metric, "selectivity, alignment or r2_global");

  std::vector<std::string> topo_filter;
  std::vector<double> density_filter;
  std::vector<std::uint64_t> seed_filter;
  auto* gen = app.add_subcommand("gen", "Export synthetic bundles without fitting");
  gen->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory");
  gen->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  gen->add_option("--topology", topo_filter, "Restrict to these topologies");
  gen->add_option("--density", density_filter, "Restrict to these densities");
  gen->add_option("--seed", seed_filter, "Restrict to these seeds");

  FitOptions fo;
  double alpha = -1, lambda = -1;
  auto* fit = app.add_subcommand("fit", "Fit one model on an exported bundle");
  fit->add_option("--data", fo.data, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--method", fo.method, "pca, sparse_pca or grpca")
      ->check(CLI::IsMember({"pca", "sparse_pca", "grpca"}));
  fit->add_option("--graph", fo.graph, "edges, oracle, learn or file")
      ->check(CLI::IsMember({"edges", "oracle", "learn", "file"}));
  fit->add_option("--precision", fo.precision_file, "Precision CSV for --graph file")->check(CLI::ExistingFile);
  fit->add_option("--alpha", alpha, "Sparsity penalty per sample");
  fit->add_option("--lambda", lambda, "Laplacian penalty per sample");
  fit->add_option("--r", fo.r, "Rank (default: bundle r)");
  fit->add_option("--out", fo.out, "Model directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, out, threads, preset);
    if (*tables) return cmd_tables(in);
    if (*plot) return cmd_plot(in, metric);
    if (*gen) return cmd_gen(config, out, preset, topo_filter, density_filter, seed_filter);
    if (*fit) {
      if (alpha >= 0) fo.alpha = alpha;
      if (lambda >= 0) fo.lambda = lambda;
      return cmd_fit(fo);
    }
  } catch (const grpca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

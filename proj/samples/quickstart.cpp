// Generate one anisotropic dataset, fit PCA and GR-PCA on a train split and
// compare them on the held-out rows.

#include <cstdio>

#include "grpca/grpca.hpp"
#include "grpca/harness/config.hpp"

int main() {
  using namespace grpca;
  using namespace grpca::harness;

  // Anisotropic regime at the small "desk" size with the tuned defaults.
  const ExperimentConfig defaults = make_config(Regime::Anisotropic, "desk");
  GeneratorConfig cfg = defaults.generator;
  cfg.seed = 7;

  const SyntheticBundle data = generate_bundle(ErdosRenyi{0.1}, cfg);
  const Matrix train = data.X.topRows(1600);
  const Matrix test = data.X.bottomRows(400);

  GrpcaConfig gc;
  gc.r = cfg.r;
  gc.alpha = defaults.alpha * static_cast<double>(train.rows());
  gc.lambda = defaults.lambda * static_cast<double>(train.rows());

  const FactorModel pca = fit_pca(train, cfg.r);
  const FactorModel gr = fit_grpca(train, data.graph, gc);

  for (const FactorModel* m : {&pca, &gr}) {
    const Matrix xhat = reconstruct(*m, test);
    const Selectivity sel = selectivity(test, xhat, data.V_star, data.V_nu);
    std::printf("%-6s selectivity %6.3f  alignment %5.3f  R2_X %5.3f\n", to_string(m->method).c_str(), sel.delta,
                alignment(m->V, data.V_star).score, r2_global(test, xhat));
  }
  return 0;
}

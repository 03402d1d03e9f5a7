// Compares the serial and OpenMP primal-update paths of the coordinator and
// the k-means restart loop on a synthetic community.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "drjcc/admm.hpp"
#include "drjcc/clustering.hpp"
#include "drjcc/io_util.hpp"
#include "drjcc/synthetic.hpp"

using namespace drjcc;

namespace {

double time_admm(const CommunityConfig& config, const ScenarioSet& scenarios,
                 bool parallel, int iters, double* residual) {
  AdmmConfig admm = config.admm;
  admm.parallel = parallel;
  Coordinator coord(config, scenarios, config.ambiguity, config.risk, admm);
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < iters; ++k) {
    coord.primal_update();
    coord.auxiliary_update();
    coord.dual_update();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  *residual = coord.compute_residuals().first;
  return secs;
}

}  // namespace

int main(int argc, char** argv) {
  int prosumers = 10, samples = 30, iters = 10, restarts = 64;
  unsigned seed = 7;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const int value = std::atoi(argv[i + 1]);
    if (flag == "--prosumers") prosumers = value;
    else if (flag == "--samples") samples = value;
    else if (flag == "--iters") iters = value;
    else if (flag == "--restarts") restarts = value;
    else if (flag == "--seed") seed = static_cast<unsigned>(value);
    else {
      std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
      return 1;
    }
  }

  GeneratorSpec spec;
  spec.prosumers = prosumers;
  spec.samples = samples;
  auto [config, scenarios] = generate_synthetic_community(spec, seed);

  std::printf("threads available: %d\n", resolve_threads());
  std::printf("%-28s %10s %14s %10s\n", "kernel", "seconds", "sec/iter", "speedup");

  double r_serial = 0, r_parallel = 0;
  const double t_serial = time_admm(config, scenarios, false, iters, &r_serial);
  const double t_parallel = time_admm(config, scenarios, true, iters, &r_parallel);
  std::printf("%-28s %10.3f %14.4f %10s\n", "admm primal (serial)", t_serial,
              t_serial / iters, "1.00");
  std::printf("%-28s %10.3f %14.4f %10.2f\n", "admm primal (openmp)", t_parallel,
              t_parallel / iters, t_serial / t_parallel);
  if (r_serial != r_parallel) {
    std::fprintf(stderr, "serial/parallel residual mismatch: %.17g vs %.17g\n",
                 r_serial, r_parallel);
    return 1;
  }

  // Cluster a larger population so the restart loop has real work.
  GeneratorSpec pop = spec;
  pop.prosumers = 96;
  pop.samples = 4;
  pop.shares = {0.25, 0.25, 0.25, 0.25};
  auto [pop_config, pop_scenarios] = generate_synthetic_community(pop, seed + 1);
  std::vector<FeatureVector> features;
  for (const auto& p : pop_scenarios.prosumers)
    features.push_back(extract_features(p.nominal_load));
  const auto t0 = std::chrono::steady_clock::now();
  auto serial_model = kmeans_serial(features, 4, restarts, seed);
  const auto t1 = std::chrono::steady_clock::now();
  auto parallel_model = kmeans(features, 4, restarts, seed);
  const auto t2 = std::chrono::steady_clock::now();
  const double k_serial = std::chrono::duration<double>(t1 - t0).count();
  const double k_parallel = std::chrono::duration<double>(t2 - t1).count();
  std::printf("%-28s %10.3f %14.4f %10s\n", "kmeans restarts (serial)", k_serial,
              k_serial / restarts, "1.00");
  std::printf("%-28s %10.3f %14.4f %10.2f\n", "kmeans restarts (openmp)",
              k_parallel, k_parallel / restarts, k_serial / k_parallel);
  if (serial_model.wcss != parallel_model.wcss) {
    std::fprintf(stderr, "serial/parallel wcss mismatch\n");
    return 1;
  }
  return 0;
}

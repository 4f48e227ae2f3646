// Command-line driver: loads an experiment config (JSON), applies flag
// overrides, runs every seed, and writes trace/summary CSVs to the output
// directory.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pomdp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"episodic POMDP learning experiments"};

  std::string config_path, out_dir, algo, pool_mode;
  std::vector<std::uint64_t> seeds;
  long k = -1;
  double c1 = -1, alpha = -1, sigma_floor = -2, xi = -1, eps = -1, p = -1;
  int boost_n = -1;

  app.add_option("--config", config_path, "experiment config file (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seeds", seeds, "seed list")->delimiter(',');
  app.add_option("--algo", algo, "oom-ucb | det-learner");
  app.add_option("--k", k, "optimistic-loop iterations");
  app.add_option("--pool-mode", pool_mode, "oracle | grid | perturb");
  app.add_option("--c1", c1, "confidence radius constant");
  app.add_option("--alpha", alpha, "emission conditioning scale for the radii");
  app.add_option("--sigma-floor", sigma_floor,
                 "minimum emission singular value (negative: reuse alpha)");
  app.add_option("--xi", xi, "signature separation (det-learner)");
  app.add_option("--eps", eps, "target accuracy / success threshold");
  app.add_option("--p", p, "failure probability (det-learner)");
  app.add_option("--boost-n", boost_n, "boosting repetitions (1 = off)");

  CLI11_PARSE(app, argc, argv);

  try {
    pomdp::ExperimentConfig config =
        config_path.empty() ? pomdp::ExperimentConfig{} : pomdp::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!seeds.empty()) config.seeds = seeds;
    if (!algo.empty()) config.algo = algo;
    if (k >= 0) config.num_iterations = k;
    if (!pool_mode.empty()) config.pool.mode = pool_mode;
    if (c1 >= 0) config.confidence.c1 = c1;
    if (alpha >= 0) config.confidence.alpha = alpha;
    if (sigma_floor >= -1) config.confidence.sigma_floor = sigma_floor;
    if (xi >= 0) config.det.xi = xi;
    if (eps >= 0) {
      config.eps = eps;
      config.det.eps = eps;
    }
    if (p >= 0) config.det.p = p;
    if (boost_n >= 0) config.boost.n = boost_n;

    const pomdp::ExperimentResult result = pomdp::run_experiment(config);
    int successes = 0;
    for (const auto& o : result.outcomes) successes += o.success ? 1 : 0;
    std::printf("instance=%s algo=%s seeds=%zu successes=%d out=%s\n",
                result.instance_name.c_str(), config.algo.c_str(), result.outcomes.size(),
                successes, config.out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

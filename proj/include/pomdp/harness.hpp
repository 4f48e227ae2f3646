#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pomdp/det_learner.hpp"
#include "pomdp/instances.hpp"
#include "pomdp/model.hpp"
#include "pomdp/oom_ucb.hpp"
#include "pomdp/policy.hpp"
#include "pomdp/rng.hpp"
#include "pomdp/simulator.hpp"

namespace pomdp {

// ---------------------------------------------------------------------------
// Experiment configuration.

struct InstanceSpec {
  std::string type = "lock-undercomplete";  // lock-overcomplete | lock-undercomplete |
                                            // lock-deterministic | random-undercomplete |
                                            // model-file
  int horizon = 3;
  int num_actions = 2;
  std::uint64_t seed = 0;
  std::vector<int> good_actions;  // locks only; empty = derived from seed
  int num_states = 2;             // random-undercomplete only
  int num_observations = 3;       // random-undercomplete only
  double alpha_target = 0.2;      // random-undercomplete only
  std::string path;               // model-file only
};

struct PoolSpec {
  std::string mode = "oracle";  // oracle | grid | perturb
  int size = 9;                 // oracle/perturb: total candidates
  double radius = 0.5;          // perturbation mixing weight
  int grid_resolution = 2;
  long grid_max_candidates = 100000;
  int pilot_iterations = 200;  // perturb mode: data for scoring random estimates
  int num_random = 50;         // perturb mode: random estimates scored
};

struct BoostSpec {
  int n = 1;                // repetitions; 0 = derive from delta
  long eval_episodes = 0;   // 0 = derive from (delta, eps, H)
  double delta = 0.1;
};

struct ExperimentConfig {
  std::string algo = "oom-ucb";  // oom-ucb | det-learner
  InstanceSpec instance;
  std::vector<std::uint64_t> seeds = {0};
  long num_iterations = 100;  // K
  double eps = 0.1;           // success threshold for the summary column
  // default floor 0: the built-in lock instances have duplicated emission
  // columns, so a positive singular-value floor would reject every candidate
  ConfidenceSpec confidence = [] {
    ConfidenceSpec s;
    s.sigma_floor = 0.0;
    return s;
  }();
  PoolSpec pool;
  DetLearnConfig det;
  BoostSpec boost;
  std::string out_dir = "out";

  void validate() const {
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (algo != "oom-ucb" && algo != "det-learner")
      throw std::invalid_argument("config: unknown algo '" + algo + "'");
    if (algo == "det-learner" && instance.type != "lock-deterministic" &&
        instance.type != "model-file")
      throw std::invalid_argument("config: det-learner requires a deterministic instance");
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.algo = j.value("algo", c.algo);
  if (j.contains("instance")) {
    const auto& ji = j.at("instance");
    c.instance.type = ji.value("type", c.instance.type);
    c.instance.horizon = ji.value("horizon", c.instance.horizon);
    c.instance.num_actions = ji.value("num_actions", c.instance.num_actions);
    c.instance.seed = ji.value("seed", c.instance.seed);
    c.instance.good_actions = ji.value("good_actions", c.instance.good_actions);
    c.instance.num_states = ji.value("num_states", c.instance.num_states);
    c.instance.num_observations = ji.value("num_observations", c.instance.num_observations);
    c.instance.alpha_target = ji.value("alpha_target", c.instance.alpha_target);
    c.instance.path = ji.value("path", c.instance.path);
  }
  c.seeds = j.value("seeds", c.seeds);
  c.num_iterations = j.value("k", c.num_iterations);
  c.eps = j.value("eps", c.eps);
  if (j.contains("confidence")) {
    const auto& jc = j.at("confidence");
    c.confidence.alpha = jc.value("alpha", c.confidence.alpha);
    c.confidence.c1 = jc.value("c1", c.confidence.c1);
    c.confidence.sigma_floor = jc.value("sigma_floor", c.confidence.sigma_floor);
  }
  if (j.contains("pool")) {
    const auto& jp = j.at("pool");
    c.pool.mode = jp.value("mode", c.pool.mode);
    c.pool.size = jp.value("size", c.pool.size);
    c.pool.radius = jp.value("radius", c.pool.radius);
    c.pool.grid_resolution = jp.value("grid_resolution", c.pool.grid_resolution);
    c.pool.grid_max_candidates = jp.value("grid_max_candidates", c.pool.grid_max_candidates);
    c.pool.pilot_iterations = jp.value("pilot_iterations", c.pool.pilot_iterations);
    c.pool.num_random = jp.value("num_random", c.pool.num_random);
  }
  if (j.contains("det")) {
    const auto& jd = j.at("det");
    c.det.xi = jd.value("xi", c.det.xi);
    c.det.eps = jd.value("eps", c.det.eps);
    c.det.p = jd.value("p", c.det.p);
    c.det.C = jd.value("C", c.det.C);
    c.det.max_states = jd.value("max_states", c.det.max_states);
  }
  if (j.contains("boost")) {
    const auto& jb = j.at("boost");
    c.boost.n = jb.value("n", c.boost.n);
    c.boost.eval_episodes = jb.value("eval_episodes", c.boost.eval_episodes);
    c.boost.delta = jb.value("delta", c.boost.delta);
  }
  c.out_dir = j.value("out", c.out_dir);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

struct BuiltInstance {
  PomdpModel model;
  std::string name;
};

inline BuiltInstance build_instance(const InstanceSpec& spec) {
  LockSpec lock{spec.horizon, spec.num_actions, spec.seed, spec.good_actions};
  if (spec.type == "lock-overcomplete") return {make_lock_overcomplete(lock), spec.type};
  if (spec.type == "lock-undercomplete") return {make_lock_undercomplete(lock), spec.type};
  if (spec.type == "lock-deterministic") return {make_lock_deterministic(lock), spec.type};
  if (spec.type == "random-undercomplete")
    return {make_random_undercomplete(spec.num_states, spec.num_observations, spec.num_actions,
                                      spec.horizon, spec.alpha_target, spec.seed)
                .model,
            spec.type};
  if (spec.type == "model-file") {
    std::ifstream in(spec.path);
    if (!in) throw std::runtime_error("cannot open model file: " + spec.path);
    return {read_model(in), spec.type};
  }
  throw std::invalid_argument("unknown instance type '" + spec.type + "'");
}

inline bool is_deterministic_instance(const PomdpModel& m) {
  auto is_01 = [](double v) { return v == 0.0 || v == 1.0; };
  for (int s = 0; s < m.num_states; ++s)
    if (!is_01(m.initial_distribution[s])) return false;
  for (const auto& step : m.transitions)
    for (const auto& T : step)
      for (int i = 0; i < T.size(); ++i)
        if (!is_01(T(i))) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Boosting: repeat a 2/3-success learner and keep the empirically best policy.

inline int default_boost_repetitions(double delta) {
  return static_cast<int>(std::ceil(8.0 * std::log(1.0 / delta)));
}

inline long default_boost_eval_episodes(int n, double delta, double eps, int horizon) {
  return static_cast<long>(
      std::ceil(8.0 * std::log(n / delta) * horizon * horizon / (eps * eps)));
}

/// Monte-Carlo estimate of V^pi from full episodes.
inline double monte_carlo_value(Simulator& env, const PolicyTree& policy, long episodes) {
  if (episodes < 1) throw std::invalid_argument("monte_carlo_value: need at least 1 episode");
  double total = 0.0;
  for (long i = 0; i < episodes; ++i) total += env.sample_episode(policy).total_reward;
  return total / static_cast<double>(episodes);
}

struct BoostResult {
  PolicyTree policy;
  int best_index = -1;
  std::vector<double> estimates;  // NaN for failed repetitions
  int failures = 0;
};

/// Runs the learner n times, scores each output policy with eval_episodes
/// Monte-Carlo episodes, and returns the empirical best (ties to the first).
/// Individual repetition failures are tolerated; if every repetition fails,
/// the last error is rethrown.
template <typename Learner>
BoostResult boost(Simulator& env, Learner&& learner, int n, long eval_episodes) {
  if (n < 1) throw std::invalid_argument("boost: need n >= 1");
  BoostResult result;
  std::exception_ptr last_error;
  std::vector<PolicyTree> policies(n);
  for (int i = 0; i < n; ++i) {
    try {
      policies[i] = learner(env, i);
    } catch (...) {
      last_error = std::current_exception();
      ++result.failures;
      result.estimates.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double v = monte_carlo_value(env, policies[i], eval_episodes);
    result.estimates.push_back(v);
    if (result.best_index < 0 || v > result.estimates[result.best_index]) result.best_index = i;
  }
  if (result.best_index < 0) std::rethrow_exception(last_error);
  result.policy = policies[result.best_index];
  return result;
}

// ---------------------------------------------------------------------------
// Pool construction for the experiment driver.

/// Perturbation pool around a moment-scored point estimate: gathers pilot
/// counts with random fixed-action policies, scores num_random Dirichlet
/// models by their worst constraint slack against those counts, and perturbs
/// the best-scoring model.
inline CandidatePool make_moment_perturb_pool(Simulator& env, int num_states,
                                              const PoolSpec& pool_spec, ConfidenceSpec spec,
                                              RngStream rng,
                                              long plan_budget = kDefaultPlanBudget) {
  const int H = env.horizon(), A = env.num_actions(), O = env.num_observations();
  spec.num_iterations = std::max<long>(pool_spec.pilot_iterations, 1);
  RngStream pilot_rng = rng.fork("pilot-actions");
  CountTables counts(H, A, O);
  for (int k = 0; k < pool_spec.pilot_iterations; ++k) {
    std::vector<int> actions(H - 1);
    for (auto& a : actions) a = pilot_rng.uniform_int(A);
    const PolicyTree policy = PolicyTree::constant_actions(H, O, actions);
    counts.record_initial(env.sample_episode(policy).observations[0]);
    for (int h = 0; h < H - 1; ++h)
      for (int a = 0; a < A; ++a)
        for (int ap = 0; ap < A; ++ap)
          counts.record_probe(h, a, ap, env.sample_probe_episode(policy, h, ap, a));
  }

  RngStream model_rng = rng.fork("random-models");
  PomdpModel best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < pool_spec.num_random; ++i) {
    PomdpModel m;
    m.horizon = H;
    m.num_states = num_states;
    m.num_actions = A;
    m.num_observations = O;
    m.initial_distribution = model_rng.dirichlet(num_states, 1.0);
    m.transitions.assign(H - 1, std::vector<Eigen::MatrixXd>(A));
    for (int h = 0; h < H - 1; ++h)
      for (int a = 0; a < A; ++a) {
        Eigen::MatrixXd T(num_states, num_states);
        for (int s = 0; s < num_states; ++s) T.col(s) = model_rng.dirichlet(num_states, 1.0);
        m.transitions[h][a] = T;
      }
    m.emissions.resize(H);
    for (int h = 0; h < H; ++h) {
      Eigen::MatrixXd Ob(O, num_states);
      for (int s = 0; s < num_states; ++s) Ob.col(s) = model_rng.dirichlet(O, 1.0);
      m.emissions[h] = Ob;
    }
    m.rewards.resize(H);
    for (int h = 0; h < H; ++h) {
      m.rewards[h].resize(O);
      for (int o = 0; o < O; ++o) m.rewards[h][o] = env.reward(h, o);
    }
    const MembershipReport report =
        check_membership(m, build_oom(m), counts, pool_spec.pilot_iterations, spec);
    double score = std::numeric_limits<double>::infinity();
    for (const auto& c : report.constraints) score = std::min(score, c.slack());
    if (score > best_score) {
      best_score = score;
      best = std::move(m);
    }
  }
  return make_perturb_pool(best, pool_spec.size - 1, pool_spec.radius, rng.fork("perturb"),
                           plan_budget);
}

inline CandidatePool build_pool(const ExperimentConfig& config, const PomdpModel& truth,
                                Simulator& env, long plan_budget = kDefaultPlanBudget) {
  const RngStream pool_rng = RngStream(config.instance.seed).fork("pool");
  if (config.pool.mode == "oracle") {
    // injected oracle: the true model plus perturbed distractors
    return make_perturb_pool(truth, config.pool.size - 1, config.pool.radius, pool_rng,
                             plan_budget);
  }
  if (config.pool.mode == "grid")
    return make_grid_pool(truth, config.pool.grid_resolution, config.pool.grid_max_candidates,
                          plan_budget);
  if (config.pool.mode == "perturb")
    return make_moment_perturb_pool(env, config.instance.num_states, config.pool,
                                    config.confidence, pool_rng, plan_budget);
  throw std::invalid_argument("unknown pool mode '" + config.pool.mode + "'");
}

// ---------------------------------------------------------------------------
// Experiment driver.

struct SeedOutcome {
  std::uint64_t seed = 0;
  long episodes = 0;
  double final_subopt = 0.0;
  bool success = false;
};

struct ExperimentResult {
  std::vector<SeedOutcome> outcomes;
  std::string instance_name;
};

namespace harness_detail {

inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace harness_detail

/// Runs every seed of the experiment, writes per-seed artifacts plus
/// summary.csv and aggregate.csv under config.out_dir, and returns the
/// outcomes. Identical config + seeds give byte-identical files.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);

  const BuiltInstance instance = build_instance(config.instance);
  const PomdpModel& truth = instance.model;
  require_valid(truth);
  if (config.algo == "det-learner" && !is_deterministic_instance(truth))
    throw std::invalid_argument("det-learner requires deterministic transitions and start state");

  const auto planned = optimal_policy(truth);
  const double v_star = planned.second.value;

  ExperimentResult result;
  result.instance_name = instance.name;

  for (const std::uint64_t seed : config.seeds) {
    const RngStream seed_rng = RngStream(seed);
    Simulator env(truth, seed_rng.fork("env"));
    SeedOutcome outcome;
    outcome.seed = seed;
    PolicyTree learned;

    if (config.algo == "oom-ucb") {
      const CandidatePool pool = build_pool(config, truth, env);
      const int boost_n = config.boost.n > 0 ? config.boost.n
                                             : default_boost_repetitions(config.boost.delta);
      if (boost_n <= 1) {
        OomUcbResult run =
            run_oom_ucb(env, pool, config.num_iterations, config.confidence,
                        seed_rng.fork("output"), &truth, v_star);
        std::ofstream trace(fs::path(config.out_dir) /
                            ("trace_seed" + std::to_string(seed) + ".csv"));
        write_trace_csv(trace, run.trace);
        learned = std::move(run.output_policy);
      } else {
        const long eval_episodes =
            config.boost.eval_episodes > 0
                ? config.boost.eval_episodes
                : default_boost_eval_episodes(boost_n, config.boost.delta, config.eps,
                                              truth.horizon);
        auto learner = [&](Simulator& inner_env, int rep) {
          OomUcbResult run =
              run_oom_ucb(inner_env, pool, config.num_iterations, config.confidence,
                          seed_rng.fork("output", static_cast<std::uint64_t>(rep)), &truth,
                          v_star);
          std::ofstream trace(fs::path(config.out_dir) /
                              ("trace_seed" + std::to_string(seed) + "_rep" +
                               std::to_string(rep) + ".csv"));
          write_trace_csv(trace, run.trace);
          return run.output_policy;
        };
        learned = boost(env, learner, boost_n, eval_episodes).policy;
      }
    } else {  // det-learner
      DetLearnResult run = learn_deterministic(env, config.det);
      std::ofstream table(fs::path(config.out_dir) /
                          ("table_seed" + std::to_string(seed) + ".txt"));
      write_reachability_table(table, run.table);
      learned = std::move(run.policy);
    }

    outcome.episodes = env.episodes_consumed();
    outcome.final_subopt = v_star - evaluate_policy(truth, learned).value;
    outcome.success = outcome.final_subopt <= config.eps;
    result.outcomes.push_back(outcome);
  }

  std::ofstream summary(fs::path(config.out_dir) / "summary.csv");
  summary << std::setprecision(17);
  summary << "# summary v1\n";
  summary << "seed,algo,instance,episodes,final_subopt,success\n";
  for (const auto& o : result.outcomes)
    summary << o.seed << ',' << config.algo << ',' << result.instance_name << ',' << o.episodes
            << ',' << o.final_subopt << ',' << (o.success ? 1 : 0) << '\n';

  std::vector<double> subopts, episodes;
  for (const auto& o : result.outcomes) {
    subopts.push_back(o.final_subopt);
    episodes.push_back(static_cast<double>(o.episodes));
  }
  std::ofstream aggregate(fs::path(config.out_dir) / "aggregate.csv");
  aggregate << std::setprecision(17);
  aggregate << "# aggregate v1\n";
  aggregate << "metric,median,q1,q3\n";
  using harness_detail::quantile;
  aggregate << "final_subopt," << quantile(subopts, 0.5) << ',' << quantile(subopts, 0.25) << ','
            << quantile(subopts, 0.75) << '\n';
  aggregate << "episodes," << quantile(episodes, 0.5) << ',' << quantile(episodes, 0.25) << ','
            << quantile(episodes, 0.75) << '\n';
  return result;
}

}  // namespace pomdp

// Acceptance harness: one self-contained check per release criterion, each
// printing a single [PASS]/[FAIL] line. Exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pomdp/harness.hpp"

using namespace pomdp;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& what, bool ok, double seconds,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %-55s (%6.1fs) %s\n", ok ? "PASS" : "FAIL", id,
              what.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

/// Random undercomplete model with small random dimensions.
PomdpModel random_small_model(RngStream& rng, int min_horizon) {
  const int S = 1 + rng.uniform_int(3);
  const int O = S + rng.uniform_int(4 - S);
  const int A = 1 + rng.uniform_int(3);
  const int H = min_horizon + rng.uniform_int(5 - min_horizon);
  return make_random_undercomplete(S, O, A, H, 0.02, rng.fork("model").uniform_int(1 << 30))
      .model;
}

/// Enumerates every (observation sequence, action sequence) pair of a given
/// length and applies fn(obs, actions).
template <typename Fn>
void for_all_sequences(const PomdpModel& m, int length, Fn&& fn) {
  std::vector<int> obs(length), actions(std::max(length - 1, 0));
  std::uint64_t total = 1;
  for (int i = 0; i < length; ++i) total *= static_cast<std::uint64_t>(m.num_observations);
  std::uint64_t action_total = 1;
  for (int i = 0; i + 1 < length; ++i) action_total *= static_cast<std::uint64_t>(m.num_actions);
  for (std::uint64_t oc = 0; oc < total; ++oc) {
    std::uint64_t rest = oc;
    for (int i = 0; i < length; ++i) {
      obs[i] = static_cast<int>(rest % m.num_observations);
      rest /= m.num_observations;
    }
    for (std::uint64_t ac = 0; ac < action_total; ++ac) {
      rest = ac;
      for (int i = 0; i + 1 < length; ++i) {
        actions[i] = static_cast<int>(rest % m.num_actions);
        rest /= m.num_actions;
      }
      fn(std::span<const int>(obs), std::span<const int>(actions));
    }
  }
}

// --------------------------------------------------------------------------
// 1. Operator sequence probabilities match the latent-state forward
//    recursion on random models, every full-length sequence.
void criterion_1() {
  Timer timer;
  RngStream rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const PomdpModel m = random_small_model(rng, 1);
    const OomParams p = build_oom(m);
    for_all_sequences(m, m.horizon, [&](std::span<const int> obs, std::span<const int> actions) {
      worst = std::max(worst, std::abs(oom_sequence_prob(p, obs, actions) -
                                       oracle::forward_prob(m, obs, actions)));
    });
  }
  std::ostringstream d;
  d << "max |Delta| = " << worst;
  report(1, "operator vs forward sequence probabilities", worst <= 1e-10 && timer.seconds() < 60,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 2. Operator-moment identity B(a,o) P = Q(o) on exact population moments.
void criterion_2() {
  Timer timer;
  RngStream rng(1002);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const PomdpModel m = random_small_model(rng, 2);
    const OomParams p = build_oom(m);
    for (int h = 0; h < m.horizon - 1; ++h) {
      const Eigen::VectorXd mu =
          h == 0 ? m.initial_distribution : rng.dirichlet(m.num_states, 1.0);
      for (int ap = 0; ap < m.num_actions; ++ap) {
        const Eigen::MatrixXd P = exact_pair_moment(m, h, ap, mu);
        for (int a = 0; a < m.num_actions; ++a)
          for (int o = 0; o < m.num_observations; ++o)
            worst = std::max(worst,
                             (p.op(h, a, o) * P - exact_triple_moment(m, h, o, a, ap, mu)).norm());
      }
    }
  }
  std::ostringstream d;
  d << "max Frobenius Delta = " << worst;
  report(2, "moment identity B*P = Q on exact moments", worst <= 1e-12 && timer.seconds() < 60,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 3. Belief entries equal marginalized joint probabilities.
void criterion_3() {
  Timer timer;
  RngStream rng(1003);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const PomdpModel m = random_small_model(rng, 2);
    const OomParams p = build_oom(m);
    for (int len = 1; len < m.horizon; ++len)
      for_all_sequences(m, len + 1, [&](std::span<const int> obs, std::span<const int> actions) {
        // belief after the length-len prefix; its o-th entry is the joint
        // probability of the prefix together with o at the next step
        const Eigen::VectorXd b = oom_belief(p, obs.subspan(0, len), actions.subspan(0, len));
        worst = std::max(worst,
                         std::abs(b[obs[len]] - oracle::forward_prob(m, obs, actions)));
      });
  }
  std::ostringstream d;
  d << "max |Delta| = " << worst;
  report(3, "belief entries vs marginalized joint probabilities", worst <= 1e-10,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 4. Planner exactness against exhaustive enumeration and, on
//    fully-observed models, tabular value iteration.
void criterion_4() {
  Timer timer;
  double worst = 0.0;
  RngStream rng(1004);
  const int dims[][3] = {{2, 2, 3}, {2, 2, 4}, {3, 2, 3}, {2, 3, 3}, {3, 3, 2}, {2, 4, 2}};
  for (const auto& [A, O, H] : dims) {
    double pow = 1.0;
    for (int t = 0; t < H - 1; ++t) pow *= O * A;
    if (pow > 256) continue;
    for (int i = 0; i < 8; ++i) {
      const int S = 1 + rng.uniform_int(O);
      const PomdpModel m =
          make_random_undercomplete(S, O, A, H, 0.02, rng.uniform_int(1 << 30)).model;
      worst = std::max(worst, std::abs(optimal_policy(m).second.value -
                                       oracle::best_value_exhaustive(m)));
    }
  }
  for (int i = 0; i < 20; ++i) {
    const PomdpModel m = make_identity_mixture_random(3, 2, 4, 1.0, 900 + i);
    worst = std::max(worst,
                     std::abs(optimal_policy(m).second.value - oracle::mdp_value_iteration(m)));
  }
  std::ostringstream d;
  d << "max |value Delta| = " << worst;
  report(4, "planner vs exhaustive enumeration and value iteration", worst <= 1e-10,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 5. The true model stays inside the confidence set for every k <= 1e4
//    simultaneously in at least 90/100 runs.
void criterion_5() {
  Timer timer;
  const auto gen = make_random_undercomplete(2, 3, 2, 3, 0.2, 1005);
  const PomdpModel& m = gen.model;
  const OomParams oom = build_oom(m);
  ConfidenceSpec spec;
  spec.alpha = 0.2;
  spec.c1 = 4.0;
  spec.num_iterations = 10000;
  const PolicyTree pi = PolicyTree::constant_actions(m.horizon, m.num_observations, {0, 1});
  int retained = 0;
  for (int run = 0; run < 100; ++run) {
    Simulator env(m, RngStream(run).fork("realizability"));
    CountTables t(m.horizon, m.num_actions, m.num_observations);
    bool ok = true;
    for (long k = 1; k <= 10000; ++k) {
      t.record_initial(env.sample_episode(pi).observations[0]);
      for (int h = 0; h < m.horizon - 1; ++h)
        for (int a = 0; a < m.num_actions; ++a)
          for (int ap = 0; ap < m.num_actions; ++ap)
            t.record_probe(h, a, ap, env.sample_probe_episode(pi, h, ap, a));
      if (ok && !check_membership(m, oom, t, k, spec).member) ok = false;
    }
    if (ok) ++retained;
  }
  std::ostringstream d;
  d << "retained " << retained << "/100 runs";
  report(5, "true model retained for all k <= 1e4 (c1 = 4)",
         retained >= 90 && timer.seconds() < 600, timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 6. Count concentration decays at the Monte-Carlo square-root rate.
void criterion_6() {
  Timer timer;
  const auto gen = make_random_undercomplete(2, 3, 2, 3, 0.1, 1006);
  const PomdpModel& m = gen.model;
  const PolicyTree pi = PolicyTree::constant_actions(m.horizon, m.num_observations, {0, 0});
  const int h = 1, a = 1, ap = 0;
  const Eigen::MatrixXd P = exact_pair_moment(m, h, ap, m.initial_distribution);
  const std::vector<long> ks = {100, 1000, 10000};
  std::vector<std::vector<double>> errors(ks.size());
  for (int run = 0; run < 100; ++run) {
    Simulator env(m, RngStream(run).fork("concentration"));
    CountTables t(m.horizon, m.num_actions, m.num_observations);
    long done = 0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      for (; done < ks[j]; ++done)
        t.record_probe(h, a, ap, env.sample_probe_episode(pi, h, ap, a));
      errors[j].push_back((t.pair_count_d(h, a, ap) / static_cast<double>(ks[j]) - P).norm());
    }
  }
  // least-squares slope of log(median error) against log k
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const double x = std::log(static_cast<double>(ks[j]));
    const double y = std::log(harness_detail::quantile(errors[j], 0.5));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = static_cast<double>(ks.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  std::ostringstream d;
  d << "log-log slope = " << slope;
  report(6, "moment error decays at the square-root rate", slope >= -0.65 && slope <= -0.35,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 7/8/11 share one environment: the undercomplete two-chain lock plus a pool
// of structured distractors with inflated claimed values.

/// Largest exact constraint-violation slope of a candidate against the
/// truth's population moments under the probe schedule.
double moment_gap(const PomdpModel& truth, const PomdpModel& cand) {
  const OomParams oom = build_oom(cand);
  double gap = (oom.initial_vector - build_oom(truth).initial_vector).norm();
  for (int h = 0; h < truth.horizon - 1; ++h)
    for (int ap = 0; ap < truth.num_actions; ++ap) {
      const Eigen::MatrixXd P = exact_pair_moment(truth, h, ap, truth.initial_distribution);
      for (int a = 0; a < truth.num_actions; ++a)
        for (int o = 0; o < truth.num_observations; ++o) {
          const Eigen::MatrixXd Q =
              exact_triple_moment(truth, h, o, a, ap, truth.initial_distribution);
          gap = std::max(gap, (oom.op(h, a, o) * P - Q).norm());
        }
    }
  return gap;
}

/// Truth plus eight distractors. Each distractor believes a wrong action
/// sequence opens the lock, claims a value above 1/2 via an inflated starting
/// mass on its rewarded chain, and carries a random perturbation screened so
/// its implied moments diverge detectably from the data-generating process.
CandidatePool build_lock_pool(const LockSpec& lock) {
  const PomdpModel truth = make_lock_undercomplete(lock);
  const auto good = lock_good_actions(lock);
  CandidatePool pool;
  pool.add("truth", truth);
  RngStream rng = RngStream(lock.seed).fork("pool");
  const double mix = 0.25;
  int added = 0;
  for (int attempt = 0; added < 8 && attempt < 40000; ++attempt) {
    std::vector<int> seq(2);
    seq[0] = (attempt % 3 == 0) ? 1 - good[0] : good[0];
    seq[1] = (attempt % 3 != 0) ? 1 - good[1] : good[1];
    LockSpec wrong = lock;
    wrong.good_actions = seq;
    PomdpModel d = make_lock_undercomplete(wrong);
    const double p = 0.95 - 0.05 * added;
    d.initial_distribution << p / 2, p / 2, (1 - p) / 2, (1 - p) / 2;
    RngStream drng = rng.fork("d", attempt);
    for (auto& step : d.transitions)
      for (auto& T : step)
        for (int s = 0; s < d.num_states; ++s)
          T.col(s) = (1 - mix) * T.col(s) + mix * drng.dirichlet(d.num_states, 1.0);
    for (auto& E : d.emissions)
      for (int s = 0; s < d.num_states; ++s)
        E.col(s) = (1 - mix) * E.col(s) + mix * drng.dirichlet(d.num_observations, 1.0);
    if (moment_gap(truth, d) < 1.0) continue;
    CandidatePool trial;
    trial.add("trial", d);
    if (trial.entry(0).value < 0.53) continue;                         // must look better
    if (evaluate_policy(truth, trial.entry(0).policy).value > 0.1) continue;  // must act worse
    pool.add("distractor-" + std::to_string(added), d);
    ++added;
  }
  if (added < 8) throw std::runtime_error("distractor screening failed");
  return pool;
}

ConfidenceSpec lock_confidence() {
  ConfidenceSpec spec;
  spec.alpha = 1.0;       // radius scale; the lock's duplicated emission
  spec.sigma_floor = 0.0; // columns are rank deficient, so no sigma floor
  spec.c1 = 2.5;
  return spec;
}

struct LockBatch {
  int optimal_runs = 0;       // output policy within 0.1 of optimal
  int value_separated = 0;    // successful runs with learned value >= 0.4
  double median_avg_subopt = 0.0;
};

LockBatch run_lock_batch(const PomdpModel& truth, const CandidatePool& pool, long K, int runs) {
  LockBatch batch;
  std::vector<double> avg;
  for (int run = 0; run < runs; ++run) {
    Simulator env(truth, RngStream(run).fork("env"));
    const OomUcbResult r =
        run_oom_ucb(env, pool, K, lock_confidence(), RngStream(run).fork("output"), &truth, 0.5);
    const TraceRow& out = r.trace[r.output_iteration - 1];
    if (out.subopt <= 0.1) {
      ++batch.optimal_runs;
      if (out.v_true >= 0.4) ++batch.value_separated;
    }
    avg.push_back(r.trace.back().cum_subopt / static_cast<double>(K));
  }
  batch.median_avg_subopt = harness_detail::quantile(avg, 0.5);
  return batch;
}

void criteria_7_8_11() {
  LockSpec lock;
  lock.seed = 5;
  const PomdpModel truth = make_lock_undercomplete(lock);
  const CandidatePool pool = build_lock_pool(lock);

  {
    Timer timer;
    const LockBatch at250 = run_lock_batch(truth, pool, 250, 30);
    const LockBatch at2000 = run_lock_batch(truth, pool, 2000, 30);
    const LockBatch at4000 = run_lock_batch(truth, pool, 4000, 30);
    {
      std::ostringstream d;
      d << "0.1-optimal in " << at2000.optimal_runs << "/30; median avg subopt "
        << at250.median_avg_subopt << " (K=250) vs " << at4000.median_avg_subopt << " (K=4000)";
      report(7, "optimistic loop solves the lock and improves with K",
             at2000.optimal_runs >= 20 &&
                 at4000.median_avg_subopt < at250.median_avg_subopt &&
                 timer.seconds() < 1800,
             timer.seconds(), d.str());
    }
    {
      Timer t8;
      const double baseline = uniform_random_policy_value(truth);
      const double expected = 0.5 * std::pow(static_cast<double>(truth.num_actions),
                                             -(truth.horizon - 1));
      std::ostringstream d;
      d << "baseline " << baseline << ", learned >= 0.4 in " << at2000.value_separated << "/"
        << at2000.optimal_runs << " successful runs";
      report(8, "learned policy separates from the random-walk baseline",
             std::abs(baseline - expected) <= 1e-10 &&
                 at2000.value_separated == at2000.optimal_runs,
             t8.seconds(), d.str());
    }
  }

  {
    Timer timer;
    const long eval_episodes = default_boost_eval_episodes(8, 0.1, 0.1, truth.horizon);
    int meta_success = 0;
    for (int meta = 0; meta < 50; ++meta) {
      const RngStream meta_rng = RngStream(meta).fork("boost-meta");
      Simulator env(truth, meta_rng.fork("env"));
      auto learner = [&](Simulator& inner, int rep) {
        return run_oom_ucb(inner, pool, 2000, lock_confidence(),
                           meta_rng.fork("output", static_cast<std::uint64_t>(rep)))
            .output_policy;
      };
      const BoostResult boosted = boost(env, learner, 8, eval_episodes);
      if (0.5 - evaluate_policy(truth, boosted.policy).value <= 0.1) ++meta_success;
    }
    std::ostringstream d;
    d << "meta-success " << meta_success << "/50";
    report(11, "boosting amplifies the 2/3 success probability", meta_success >= 45,
           timer.seconds(), d.str());
  }
}

// --------------------------------------------------------------------------
// 9. Deterministic-transition learner: exact recovery and near-optimal play.
void criterion_9() {
  Timer timer;
  DetLearnConfig cfg;
  cfg.xi = std::sqrt(2.0);
  cfg.eps = 0.1;
  cfg.p = 0.05;
  cfg.C = 32.0;
  cfg.max_states = 4;
  int recovered = 0;
  bool accounting_ok = true;
  for (int run = 0; run < 100; ++run) {
    LockSpec lock;
    lock.horizon = 3;
    lock.seed = run;
    const PomdpModel m = make_lock_deterministic(lock);
    const auto good = lock_good_actions(lock);
    Simulator env(m, RngStream(run).fork("det"));
    const DetLearnResult result = learn_deterministic(env, cfg);
    long reachable = 0;
    for (int h = 0; h < m.horizon - 1; ++h) reachable += result.table.num_discovered[h];
    if (env.episodes_consumed() !=
        result.samples_per_cell * m.num_actions * reachable)
      accounting_ok = false;

    // structural recovery up to relabeling: the good chain emits observation
    // 0 before the final step, so signatures classify the discovered states
    bool ok = result.table.num_discovered[0] == 1;
    for (int h = 1; h < m.horizon; ++h) ok = ok && result.table.num_discovered[h] == 2;
    if (ok) {
      auto looks_good = [](const Eigen::VectorXd& sig) { return sig[0] > 0.5; };
      for (int h = 0; h < m.horizon - 1; ++h)
        for (int s = 0; s < result.table.num_discovered[h]; ++s)
          for (int a = 0; a < m.num_actions; ++a) {
            const bool from_good = looks_good(result.table.signatures[h][s]);
            const bool to_good =
                looks_good(result.table.signatures[h + 1][result.table.transition_map[h][a][s]]);
            ok = ok && to_good == (from_good && a == good[h]);
          }
    }
    ok = ok && evaluate_policy(m, result.policy).value >= 1.0 - cfg.eps;
    if (ok) ++recovered;
  }
  std::ostringstream d;
  d << "recovered " << recovered << "/100; episode accounting "
    << (accounting_ok ? "exact" : "BROKEN");
  report(9, "deterministic learner recovers the lock", recovered >= 93 && accounting_ok &&
                                                           timer.seconds() < 600,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 10. Square-root potential bound on premise-satisfying sequences.
void criterion_10() {
  Timer timer;
  RngStream rng(1010);
  int satisfied = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = 3 + rng.uniform_int(198);
    const double C_z = 0.1 + 2.0 * rng.uniform();
    const double C_w = 0.1 + 2.0 * rng.uniform();
    const double C_0 = 0.1 + 2.0 * rng.uniform();
    double S = 0.0, lhs = 0.0;
    for (int k = 1; k <= K; ++k) {
      double z_cap = C_z;
      if (S > 0.0)
        z_cap = std::min(z_cap, C_z * C_w * C_0 * std::sqrt(static_cast<double>(k)) / S);
      const double z = z_cap * rng.uniform();
      const double w = C_w * rng.uniform();
      lhs += z * w;
      S += w;
    }
    if (lhs <= 2.0 * C_z * C_w * (C_0 + 1.0) * std::sqrt(static_cast<double>(K)) *
                   std::log(static_cast<double>(K)))
      ++satisfied;
  }
  std::ostringstream d;
  d << satisfied << "/1000 sequences within the bound";
  report(10, "square-root bound on generated weight sequences", satisfied == 1000,
         timer.seconds(), d.str());
}

// --------------------------------------------------------------------------
// 12. Identical configurations produce byte-identical CSV artifacts.
void criterion_12() {
  Timer timer;
  ExperimentConfig config;
  config.instance.type = "lock-undercomplete";
  config.instance.seed = 3;
  config.seeds = {0, 1};
  config.num_iterations = 40;
  config.confidence = lock_confidence();
  config.pool.size = 3;

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  const fs::path base = fs::temp_directory_path() / "acceptance-determinism";
  std::vector<std::string> contents[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = base / ("rep" + std::to_string(rep));
    fs::remove_all(dir);
    config.out_dir = dir.string();
    run_experiment(config);
    for (const std::string name :
         {"trace_seed0.csv", "trace_seed1.csv", "summary.csv", "aggregate.csv"})
      contents[rep].push_back(slurp(dir / name));
  }
  const bool ok = contents[0] == contents[1] && !contents[0][0].empty();
  report(12, "seeded reruns emit byte-identical CSVs", ok, timer.seconds(),
         ok ? "4/4 files identical" : "artifact mismatch");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criteria_7_8_11();
  criterion_9();
  criterion_10();
  criterion_12();
  if (failures) std::printf("%d criterion(s) FAILED\n", failures);
  else std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pomdp/policy.hpp"
#include "pomdp/simulator.hpp"

namespace pomdp {

struct DetLearnConfig {
  double xi = 0.0;       // l2 separation between distinct state signatures
  double eps = 0.1;      // target accuracy of the output policy
  double p = 0.05;       // failure probability
  double C = 32.0;       // absolute constant in the sample-size formula
  int max_states = 0;    // known bound S on the number of latent states

  void validate() const {
    if (xi <= 0.0 || eps <= 0.0 || p <= 0.0 || C <= 0.0 || max_states < 1)
      throw std::invalid_argument("DetLearnConfig: xi, eps, p, C must be positive and max_states >= 1");
  }
};

/// Episodes per (state, action) probe cell:
///   N = ceil(C * log(H*S*A / p) / min(eps / (sqrt(O) * H), xi)^2).
inline long det_learn_sample_size(const DetLearnConfig& cfg, int horizon, int num_actions,
                                  int num_observations) {
  cfg.validate();
  const double denom =
      std::min(cfg.eps / (std::sqrt(static_cast<double>(num_observations)) * horizon), cfg.xi);
  const double raw = cfg.C *
                     std::log(static_cast<double>(horizon) * cfg.max_states * num_actions / cfg.p) /
                     (denom * denom);
  return static_cast<long>(std::ceil(raw));
}

inline double signature_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("signature_distance: length mismatch");
  return (a - b).norm();
}

/// What the deterministic-transition learner discovers: for each step, the
/// reachable states it found, an empirical observation distribution
/// (signature) per state, a fixed action plan that reaches each state, and
/// 0/1 transition maps between consecutive steps' state indices.
struct ReachabilityTable {
  int horizon = 0;
  int num_actions = 0;
  int num_observations = 0;
  std::vector<int> num_discovered;                       // n_h, one per step
  std::vector<std::vector<Eigen::VectorXd>> signatures;  // [h][s], length O
  std::vector<std::vector<std::vector<int>>> plans;      // [h][s], h actions each
  std::vector<std::vector<std::vector<int>>> transition_map;  // [h][a][s] -> state at h+1
  std::vector<std::string> warnings;

  int states_at(int h) const { return num_discovered[h]; }
};

struct DetLearnResult {
  ReachabilityTable table;
  PolicyTree policy;
  long samples_per_cell = 0;   // N above
  long episodes_consumed = 0;  // N * A * sum_h n_h, asserted in tests
};

/// Reachability discovery for deterministic transitions and a deterministic
/// initial state. For each discovered state s at step h and each action a,
/// runs N episodes of s's plan followed by a, averages the indicator of
/// o_{h+1} into a signature estimate z, and either merges z with an existing
/// step-(h+1) state (first state within 0.5*xi, in index order; additional
/// matches are logged as warnings) or registers a new state. The output
/// policy comes from exact dynamic programming on the recovered deterministic
/// model with per-state rewards sum_o r_h(o) * signature(o).
inline DetLearnResult learn_deterministic(Simulator& env, const DetLearnConfig& cfg) {
  cfg.validate();
  const int H = env.horizon(), A = env.num_actions(), O = env.num_observations();
  const long episodes_before = env.episodes_consumed();

  DetLearnResult result;
  ReachabilityTable& table = result.table;
  table.horizon = H;
  table.num_actions = A;
  table.num_observations = O;
  table.num_discovered.assign(H, 0);
  table.signatures.resize(H);
  table.plans.resize(H);
  table.transition_map.assign(std::max(H - 1, 0),
                              std::vector<std::vector<int>>(A));

  // The initial state is deterministic: one reachable state with the empty plan.
  table.num_discovered[0] = 1;
  table.signatures[0].push_back(Eigen::VectorXd::Zero(O));
  table.plans[0].push_back({});

  if (H == 1) {
    result.policy = PolicyTree(H, O);
    result.samples_per_cell = det_learn_sample_size(cfg, H, A, O);
    result.episodes_consumed = 0;
    return result;
  }

  const long N = det_learn_sample_size(cfg, H, A, O);
  result.samples_per_cell = N;

  // The step-0 signature is estimated for free from the o_0 symbols seen
  // while probing step 0; no dedicated episodes are spent on it.
  Eigen::VectorXd initial_signature = Eigen::VectorXd::Zero(O);
  long initial_samples = 0;

  for (int h = 0; h < H - 1; ++h) {
    for (int a = 0; a < A; ++a) table.transition_map[h][a].assign(table.num_discovered[h], -1);
    for (int s = 0; s < table.num_discovered[h]; ++s) {
      std::vector<int> plan = table.plans[h][s];
      plan.push_back(0);
      for (int a = 0; a < A; ++a) {
        plan.back() = a;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(O);
        for (long i = 0; i < N; ++i) {
          const std::vector<int> obs = env.run_plan(plan, h + 1);
          z[obs[h + 1]] += 1.0;
          if (h == 0) {
            initial_signature[obs[0]] += 1.0;
            ++initial_samples;
          }
        }
        z /= static_cast<double>(N);

        int match = -1;
        int num_matches = 0;
        for (int t = 0; t < table.num_discovered[h + 1]; ++t) {
          if (signature_distance(table.signatures[h + 1][t], z) <= 0.5 * cfg.xi) {
            ++num_matches;
            if (match < 0) match = t;
          }
        }
        if (num_matches > 1)
          table.warnings.push_back("ambiguous match at h=" + std::to_string(h + 1) +
                                   " from (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                   "): " + std::to_string(num_matches) +
                                   " signatures within 0.5*xi; kept first in index order");
        if (match < 0) {
          if (table.num_discovered[h + 1] >= cfg.max_states)
            throw std::runtime_error(
                "learn_deterministic: more than max_states distinct signatures at step " +
                std::to_string(h + 1) +
                " (xi misconfigured, or transitions/initial state not deterministic)");
          match = table.num_discovered[h + 1]++;
          table.signatures[h + 1].push_back(z);
          table.plans[h + 1].push_back(plan);
        }
        table.transition_map[h][a][s] = match;
      }
    }
  }
  if (initial_samples > 0) table.signatures[0][0] = initial_signature / initial_samples;

  // Backward DP on the recovered deterministic model.
  std::vector<std::vector<double>> value(H);
  std::vector<std::vector<int>> best_action(H - 1);
  auto state_reward = [&](int h, int s) {
    double r = 0.0;
    for (int o = 0; o < O; ++o) r += env.reward(h, o) * table.signatures[h][s][o];
    return r;
  };
  value[H - 1].resize(table.num_discovered[H - 1]);
  for (int s = 0; s < table.num_discovered[H - 1]; ++s) value[H - 1][s] = state_reward(H - 1, s);
  for (int h = H - 2; h >= 0; --h) {
    value[h].resize(table.num_discovered[h]);
    best_action[h].resize(table.num_discovered[h]);
    for (int s = 0; s < table.num_discovered[h]; ++s) {
      double best = -1.0;
      int arg = 0;
      for (int a = 0; a < A; ++a) {
        const double v = value[h + 1][table.transition_map[h][a][s]];
        if (v > best) {
          best = v;
          arg = a;
        }
      }
      value[h][s] = state_reward(h, s) + best;
      best_action[h][s] = arg;
    }
  }

  // Deterministic start + deterministic transitions: the optimal policy is an
  // open-loop action sequence, written as a history-independent tree.
  PolicyTree policy(H, O);
  int s = 0;
  for (int h = 0; h < H - 1; ++h) {
    const int a = best_action[h][s];
    policy.set_level_action(h, a);
    s = table.transition_map[h][a][s];
  }
  result.policy = std::move(policy);
  result.episodes_consumed = env.episodes_consumed() - episodes_before;
  return result;
}

// ---------------------------------------------------------------------------
// Plain-text serialization of the reachability table.

inline void write_reachability_table(std::ostream& os, const ReachabilityTable& t) {
  os << std::setprecision(17);
  os << "reachability-table v1\n";
  os << "horizon " << t.horizon << "\n";
  os << "actions " << t.num_actions << "\n";
  os << "observations " << t.num_observations << "\n";
  for (int h = 0; h < t.horizon; ++h) {
    os << "step " << h << " states " << t.num_discovered[h] << "\n";
    for (int s = 0; s < t.num_discovered[h]; ++s) {
      os << "signature " << s;
      for (int o = 0; o < t.num_observations; ++o) os << ' ' << t.signatures[h][s][o];
      os << "\n";
      os << "plan " << s;
      for (const int a : t.plans[h][s]) os << ' ' << a;
      os << "\n";
    }
  }
  for (int h = 0; h < t.horizon - 1; ++h)
    for (int a = 0; a < t.num_actions; ++a) {
      os << "map " << h << ' ' << a;
      for (const int next : t.transition_map[h][a]) os << ' ' << next;
      os << "\n";
    }
  os << "warnings " << t.warnings.size() << "\n";
  for (const auto& w : t.warnings) os << w << "\n";
}

inline ReachabilityTable read_reachability_table(std::istream& is) {
  auto expect = [&is](const std::string& token) {
    std::string got;
    is >> got;
    if (got != token)
      throw std::runtime_error("table parse: expected '" + token + "', got '" + got + "'");
  };
  expect("reachability-table");
  expect("v1");
  ReachabilityTable t;
  expect("horizon");
  is >> t.horizon;
  expect("actions");
  is >> t.num_actions;
  expect("observations");
  is >> t.num_observations;
  if (!is || t.horizon < 1 || t.num_actions < 1 || t.num_observations < 1)
    throw std::runtime_error("table parse: bad dimensions");
  t.num_discovered.assign(t.horizon, 0);
  t.signatures.resize(t.horizon);
  t.plans.resize(t.horizon);
  for (int h = 0; h < t.horizon; ++h) {
    int hh, n;
    expect("step");
    is >> hh;
    expect("states");
    is >> n;
    if (hh != h || n < 0) throw std::runtime_error("table parse: step header");
    t.num_discovered[h] = n;
    for (int s = 0; s < n; ++s) {
      int ss;
      expect("signature");
      is >> ss;
      if (ss != s) throw std::runtime_error("table parse: signature order");
      Eigen::VectorXd sig(t.num_observations);
      for (int o = 0; o < t.num_observations; ++o) is >> sig[o];
      t.signatures[h].push_back(std::move(sig));
      expect("plan");
      is >> ss;
      if (ss != s) throw std::runtime_error("table parse: plan order");
      std::vector<int> plan(h);
      for (int i = 0; i < h; ++i) is >> plan[i];
      t.plans[h].push_back(std::move(plan));
    }
  }
  t.transition_map.assign(std::max(t.horizon - 1, 0),
                          std::vector<std::vector<int>>(t.num_actions));
  for (int h = 0; h < t.horizon - 1; ++h)
    for (int a = 0; a < t.num_actions; ++a) {
      int hh, aa;
      expect("map");
      is >> hh >> aa;
      if (hh != h || aa != a) throw std::runtime_error("table parse: map order");
      t.transition_map[h][a].resize(t.num_discovered[h]);
      for (int s = 0; s < t.num_discovered[h]; ++s) is >> t.transition_map[h][a][s];
    }
  std::size_t num_warnings;
  expect("warnings");
  is >> num_warnings;
  is.ignore();
  for (std::size_t i = 0; i < num_warnings; ++i) {
    std::string line;
    std::getline(is, line);
    t.warnings.push_back(line);
  }
  if (!is) throw std::runtime_error("table parse: truncated input");
  return t;
}

inline std::string reachability_table_to_string(const ReachabilityTable& t) {
  std::ostringstream os;
  write_reachability_table(os, t);
  return os.str();
}

inline ReachabilityTable reachability_table_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_reachability_table(is);
}

}  // namespace pomdp

#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pomdp/model.hpp"

namespace pomdp {

/// Histories whose joint probability falls below this threshold are pruned
/// during exact propagation; their contribution to value is below any
/// tolerance used in this project.
inline constexpr double kHistoryMassFloor = 1e-300;

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic history-dependent policy. The action taken after observing
/// (o_0, ..., o_t) is stored at level t; since the policy itself is
/// deterministic, realized histories are identified by their observation
/// sequence alone. Level t holds O^(t+1) entries, indexed by the code
/// sum_i o_i * O^i.
class PolicyTree {
 public:
  PolicyTree() = default;

  PolicyTree(int horizon, int num_observations)
      : horizon_(horizon), num_observations_(num_observations) {
    if (horizon < 1 || num_observations < 1)
      throw std::invalid_argument("PolicyTree: bad dimensions");
    levels_.resize(horizon_ - 1);
    std::uint64_t size = 1;
    for (int t = 0; t < horizon_ - 1; ++t) {
      size *= static_cast<std::uint64_t>(num_observations_);
      levels_[t].assign(size, 0);
    }
  }

  /// Policy that plays a fixed action sequence regardless of observations.
  static PolicyTree constant_actions(int horizon, int num_observations,
                                     const std::vector<int>& actions) {
    if (static_cast<int>(actions.size()) != horizon - 1)
      throw std::invalid_argument("constant_actions: need H-1 actions");
    PolicyTree tree(horizon, num_observations);
    for (int t = 0; t < horizon - 1; ++t)
      for (auto& a : tree.levels_[t]) a = actions[t];
    return tree;
  }

  int horizon() const { return horizon_; }
  int num_observations() const { return num_observations_; }

  /// Encodes o_0..o_t with o_0 least significant.
  std::uint64_t encode(std::span<const int> obs) const {
    std::uint64_t code = 0, base = 1;
    for (const int o : obs) {
      code += static_cast<std::uint64_t>(o) * base;
      base *= static_cast<std::uint64_t>(num_observations_);
    }
    return code;
  }

  int action_at(int t, std::uint64_t code) const { return levels_[t][code]; }

  int action(std::span<const int> obs) const {
    const int t = static_cast<int>(obs.size()) - 1;
    if (t < 0 || t >= horizon_ - 1) throw std::out_of_range("PolicyTree::action: bad prefix length");
    return levels_[t][encode(obs)];
  }

  void set_action_at(int t, std::uint64_t code, int a) { levels_[t][code] = a; }

  void set_action(std::span<const int> obs, int a) {
    const int t = static_cast<int>(obs.size()) - 1;
    levels_[t][encode(obs)] = a;
  }

  /// Assigns the same action to every history at level t.
  void set_level_action(int t, int a) {
    for (auto& entry : levels_[t]) entry = a;
  }

  bool operator==(const PolicyTree& other) const {
    return horizon_ == other.horizon_ && num_observations_ == other.num_observations_ &&
           levels_ == other.levels_;
  }

  void write(std::ostream& os) const {
    os << "policy v1\n";
    os << "horizon " << horizon_ << "\n";
    os << "observations " << num_observations_ << "\n";
    for (int t = 0; t < horizon_ - 1; ++t) {
      for (std::uint64_t code = 0; code < levels_[t].size(); ++code) {
        os << t;
        std::uint64_t rest = code;
        for (int i = 0; i <= t; ++i) {
          os << ' ' << rest % num_observations_;
          rest /= num_observations_;
        }
        os << ' ' << levels_[t][code] << '\n';
      }
    }
  }

  static PolicyTree read(std::istream& is) {
    auto expect = [&is](const std::string& token) {
      std::string got;
      is >> got;
      if (got != token)
        throw std::runtime_error("policy parse: expected '" + token + "', got '" + got + "'");
    };
    expect("policy");
    expect("v1");
    int horizon, num_obs;
    expect("horizon");
    is >> horizon;
    expect("observations");
    is >> num_obs;
    PolicyTree tree(horizon, num_obs);
    for (int t = 0; t < horizon - 1; ++t) {
      for (std::uint64_t code = 0; code < tree.levels_[t].size(); ++code) {
        int tt;
        is >> tt;
        if (tt != t) throw std::runtime_error("policy parse: level order");
        std::vector<int> obs(t + 1);
        for (int i = 0; i <= t; ++i) is >> obs[i];
        int a;
        is >> a;
        tree.set_action(obs, a);
      }
    }
    if (!is) throw std::runtime_error("policy parse: truncated input");
    return tree;
  }

 private:
  int horizon_ = 0;
  int num_observations_ = 0;
  std::vector<std::vector<int>> levels_;
};

struct ValueReport {
  double value = 0.0;
  Eigen::VectorXd per_step_reward;  // length H; value == per_step_reward.sum()
};

inline void check_horizon_match(const PomdpModel& model, const PolicyTree& policy) {
  if (model.horizon != policy.horizon() || model.num_observations != policy.num_observations())
    throw std::invalid_argument("model/policy horizon or observation-space mismatch");
}

inline void check_plan_budget(const PomdpModel& m, std::uint64_t budget) {
  const double tree_size =
      std::pow(static_cast<double>(m.num_observations) * m.num_actions, m.horizon - 1);
  if (tree_size > static_cast<double>(budget))
    throw BudgetExceeded("history tree of size " + std::to_string(tree_size) +
                         " exceeds budget " + std::to_string(budget));
}

inline constexpr std::uint64_t kDefaultPlanBudget = 1'000'000;

/// Exact V^pi by forward propagation of the joint distribution over
/// (observation history, latent state). Weight vectors stay unnormalized.
inline ValueReport evaluate_policy(const PomdpModel& m, const PolicyTree& policy,
                                   std::uint64_t budget = kDefaultPlanBudget) {
  check_horizon_match(m, policy);
  check_plan_budget(m, budget);
  ValueReport report;
  report.per_step_reward = Eigen::VectorXd::Zero(m.horizon);

  struct Node {
    std::uint64_t code;
    int obs;
    Eigen::VectorXd w;  // w[s] = Pr(history, s_h = s)
  };
  std::vector<Node> frontier;
  for (int o = 0; o < m.num_observations; ++o) {
    Eigen::VectorXd w =
        m.emission_row(0, o).cwiseProduct(m.initial_distribution);
    const double mass = w.sum();
    if (mass < kHistoryMassFloor) continue;
    report.per_step_reward[0] += m.reward(0, o) * mass;
    frontier.push_back({static_cast<std::uint64_t>(o), o, std::move(w)});
  }
  std::uint64_t base = m.num_observations;
  for (int h = 0; h + 1 < m.horizon; ++h) {
    std::vector<Node> next;
    next.reserve(frontier.size() * m.num_observations);
    for (const auto& node : frontier) {
      const int a = policy.action_at(h, node.code);
      const Eigen::VectorXd v = m.transition(h, a) * node.w;
      for (int o = 0; o < m.num_observations; ++o) {
        Eigen::VectorXd w = m.emission_row(h + 1, o).cwiseProduct(v);
        const double mass = w.sum();
        if (mass < kHistoryMassFloor) continue;
        report.per_step_reward[h + 1] += m.reward(h + 1, o) * mass;
        next.push_back({node.code + static_cast<std::uint64_t>(o) * base, o, std::move(w)});
      }
    }
    frontier = std::move(next);
    base *= static_cast<std::uint64_t>(m.num_observations);
  }
  report.value = report.per_step_reward.sum();
  return report;
}

namespace detail {

/// Unnormalized optimal value-to-go from step h given history weights w.
inline double plan_value(const PomdpModel& m, int h, const Eigen::VectorXd& w) {
  if (h + 1 >= m.horizon) return 0.0;
  double best = -1.0;  // value mass is nonnegative
  for (int a = 0; a < m.num_actions; ++a) {
    const Eigen::VectorXd v = m.transition(h, a) * w;
    double total = 0.0;
    for (int o = 0; o < m.num_observations; ++o) {
      Eigen::VectorXd w2 = m.emission_row(h + 1, o).cwiseProduct(v);
      const double mass = w2.sum();
      if (mass < kHistoryMassFloor) continue;
      total += m.reward(h + 1, o) * mass + plan_value(m, h + 1, w2);
    }
    if (total > best) best = total;
  }
  return best < 0.0 ? 0.0 : best;
}

/// Records the optimal action at each reachable history, descending only
/// along the chosen branch. Ties break toward the smallest action index.
inline void plan_record(const PomdpModel& m, int h, std::uint64_t code, std::uint64_t base,
                        const Eigen::VectorXd& w, PolicyTree& tree) {
  if (h + 1 >= m.horizon) return;
  double best = -1.0;
  int best_action = 0;
  for (int a = 0; a < m.num_actions; ++a) {
    const Eigen::VectorXd v = m.transition(h, a) * w;
    double total = 0.0;
    for (int o = 0; o < m.num_observations; ++o) {
      Eigen::VectorXd w2 = m.emission_row(h + 1, o).cwiseProduct(v);
      const double mass = w2.sum();
      if (mass < kHistoryMassFloor) continue;
      total += m.reward(h + 1, o) * mass + plan_value(m, h + 1, w2);
    }
    if (total > best) {
      best = total;
      best_action = a;
    }
  }
  tree.set_action_at(h, code, best_action);
  const Eigen::VectorXd v = m.transition(h, best_action) * w;
  for (int o = 0; o < m.num_observations; ++o) {
    Eigen::VectorXd w2 = m.emission_row(h + 1, o).cwiseProduct(v);
    if (w2.sum() < kHistoryMassFloor) continue;
    plan_record(m, h + 1, code + static_cast<std::uint64_t>(o) * base,
                base * static_cast<std::uint64_t>(m.num_observations), w2, tree);
  }
}

}  // namespace detail

/// Exact optimum over all deterministic history-dependent policies by
/// backward induction on unnormalized belief vectors.
inline std::pair<PolicyTree, ValueReport> optimal_policy(
    const PomdpModel& m, std::uint64_t budget = kDefaultPlanBudget) {
  check_plan_budget(m, budget);
  PolicyTree tree(m.horizon, m.num_observations);
  for (int o = 0; o < m.num_observations; ++o) {
    Eigen::VectorXd w = m.emission_row(0, o).cwiseProduct(m.initial_distribution);
    if (w.sum() < kHistoryMassFloor) continue;
    detail::plan_record(m, 0, static_cast<std::uint64_t>(o),
                        static_cast<std::uint64_t>(m.num_observations), w, tree);
  }
  return {tree, evaluate_policy(m, tree, budget)};
}

/// One element of Gamma(pi, h): an observation sequence of length h with the
/// policy's actions filled in. Actions run through min(h, H-1); for h < H
/// this is the appendix convention that includes a_h.
struct PolicyHistory {
  std::vector<int> observations;
  std::vector<int> actions;
};

/// Enumerates Gamma(pi, h): exactly O^h sequences, one per observation tuple.
inline std::vector<PolicyHistory> policy_consistent_trajectories(const PolicyTree& policy, int h) {
  if (h < 1 || h > policy.horizon())
    throw std::out_of_range("policy_consistent_trajectories: h out of range");
  const int O = policy.num_observations();
  const int num_actions_filled = std::min(h, policy.horizon() - 1);
  std::uint64_t count = 1;
  for (int i = 0; i < h; ++i) count *= static_cast<std::uint64_t>(O);
  std::vector<PolicyHistory> out;
  out.reserve(count);
  for (std::uint64_t code = 0; code < count; ++code) {
    PolicyHistory seq;
    seq.observations.resize(h);
    std::uint64_t rest = code;
    for (int i = 0; i < h; ++i) {
      seq.observations[i] = static_cast<int>(rest % O);
      rest /= O;
    }
    seq.actions.resize(num_actions_filled);
    std::uint64_t prefix_code = 0, base = 1;
    for (int t = 0; t < num_actions_filled; ++t) {
      prefix_code += static_cast<std::uint64_t>(seq.observations[t]) * base;
      base *= static_cast<std::uint64_t>(O);
      seq.actions[t] = policy.action_at(t, prefix_code);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

/// Exact Pr^pi(s_h = .) by forward propagation over (history, state).
inline Eigen::VectorXd visitation_distribution(const PomdpModel& m, const PolicyTree& policy,
                                               int h, std::uint64_t budget = kDefaultPlanBudget) {
  check_horizon_match(m, policy);
  if (h < 0 || h >= m.horizon) throw std::out_of_range("visitation_distribution: h out of range");
  check_plan_budget(m, budget);
  if (h == 0) return m.initial_distribution;

  struct Node {
    std::uint64_t code;
    Eigen::VectorXd w;
  };
  std::vector<Node> frontier;
  for (int o = 0; o < m.num_observations; ++o) {
    Eigen::VectorXd w = m.emission_row(0, o).cwiseProduct(m.initial_distribution);
    if (w.sum() < kHistoryMassFloor) continue;
    frontier.push_back({static_cast<std::uint64_t>(o), std::move(w)});
  }
  std::uint64_t base = m.num_observations;
  Eigen::VectorXd marginal = Eigen::VectorXd::Zero(m.num_states);
  for (int t = 0; t < h; ++t) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      const int a = policy.action_at(t, node.code);
      Eigen::VectorXd v = m.transition(t, a) * node.w;
      if (t + 1 == h) {
        marginal += v;
        continue;
      }
      for (int o = 0; o < m.num_observations; ++o) {
        Eigen::VectorXd w = m.emission_row(t + 1, o).cwiseProduct(v);
        if (w.sum() < kHistoryMassFloor) continue;
        next.push_back({node.code + static_cast<std::uint64_t>(o) * base, std::move(w)});
      }
    }
    frontier = std::move(next);
    base *= static_cast<std::uint64_t>(m.num_observations);
  }
  return marginal;
}

inline std::string policy_to_string(const PolicyTree& tree) {
  std::ostringstream os;
  tree.write(os);
  return os.str();
}

inline PolicyTree policy_from_string(const std::string& text) {
  std::istringstream is(text);
  return PolicyTree::read(is);
}

}  // namespace pomdp

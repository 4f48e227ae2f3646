#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "pomdp/model.hpp"
#include "pomdp/rng.hpp"

namespace pomdp {

/// Combinatorial-lock family: four states (two good, two bad), a single
/// rewarded action sequence, and observations that reveal nothing about the
/// latent chain before the final step.
struct LockSpec {
  int horizon = 3;
  int num_actions = 2;
  std::uint64_t seed = 0;
  /// Optional explicit good sequence; if empty it is drawn pseudo-randomly
  /// from the seed so learners cannot succeed by action-index bias.
  std::vector<int> good_actions;
};

namespace lock_detail {

constexpr int kGood1 = 0, kGood2 = 1, kBad1 = 2, kBad2 = 3;

inline std::vector<int> resolve_good_actions(const LockSpec& spec) {
  if (spec.horizon < 2 || spec.num_actions < 2)
    throw std::invalid_argument("lock: need H >= 2 and A >= 2");
  if (!spec.good_actions.empty()) {
    if (static_cast<int>(spec.good_actions.size()) != spec.horizon - 1)
      throw std::invalid_argument("lock: good_actions must have H-1 entries");
    return spec.good_actions;
  }
  RngStream rng = RngStream(spec.seed).fork("lock-good-actions");
  std::vector<int> actions(spec.horizon - 1);
  for (auto& a : actions) a = rng.uniform_int(spec.num_actions);
  return actions;
}

/// Good action keeps good states good (uniformly over goods); every other
/// action, and every action from a bad state, lands uniformly on the bads.
inline void fill_lock_transitions(PomdpModel& m, const std::vector<int>& good) {
  m.transitions.assign(m.horizon - 1, std::vector<Eigen::MatrixXd>(m.num_actions));
  for (int h = 0; h < m.horizon - 1; ++h) {
    for (int a = 0; a < m.num_actions; ++a) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
      Eigen::Vector4d to_goods(0.5, 0.5, 0.0, 0.0);
      Eigen::Vector4d to_bads(0.0, 0.0, 0.5, 0.5);
      T.col(kGood1) = (a == good[h]) ? to_goods : to_bads;
      T.col(kGood2) = T.col(kGood1);
      T.col(kBad1) = to_bads;
      T.col(kBad2) = to_bads;
      m.transitions[h][a] = T;
    }
  }
}

}  // namespace lock_detail

/// Overcomplete lock: S=4 > O=2. Observation 0 plays u1, observation 1 plays
/// u2; before the last step u1 is emitted at {g1, b1} and u2 at {g2, b2}; at
/// the last step u1 marks good states. Reward 1 iff u1 is seen at the end.
inline PomdpModel make_lock_overcomplete(const LockSpec& spec) {
  using namespace lock_detail;
  const auto good = resolve_good_actions(spec);
  PomdpModel m;
  m.horizon = spec.horizon;
  m.num_states = 4;
  m.num_actions = spec.num_actions;
  m.num_observations = 2;
  m.initial_distribution = Eigen::VectorXd::Constant(4, 0.25);
  fill_lock_transitions(m, good);
  m.emissions.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    Eigen::MatrixXd O(2, 4);
    if (h + 1 < m.horizon) {
      O.col(kGood1) << 1, 0;
      O.col(kGood2) << 0, 1;
      O.col(kBad1) << 1, 0;
      O.col(kBad2) << 0, 1;
    } else {
      O.col(kGood1) << 1, 0;
      O.col(kGood2) << 1, 0;
      O.col(kBad1) << 0, 1;
      O.col(kBad2) << 0, 1;
    }
    m.emissions[h] = O;
  }
  m.rewards.assign(m.horizon, Eigen::VectorXd::Zero(2));
  m.rewards[m.horizon - 1][0] = 1.0;
  return m;
}

/// Undercomplete lock: S=4 <= O=5. Wherever the overcomplete lock emits u2,
/// this one emits one of {q1..q4} (observations 1..4) uniformly at random.
inline PomdpModel make_lock_undercomplete(const LockSpec& spec) {
  using namespace lock_detail;
  const auto good = resolve_good_actions(spec);
  PomdpModel m;
  m.horizon = spec.horizon;
  m.num_states = 4;
  m.num_actions = spec.num_actions;
  m.num_observations = 5;
  m.initial_distribution = Eigen::VectorXd::Constant(4, 0.25);
  fill_lock_transitions(m, good);
  Eigen::VectorXd u1 = Eigen::VectorXd::Zero(5);
  u1[0] = 1.0;
  Eigen::VectorXd split = Eigen::VectorXd::Constant(5, 0.25);
  split[0] = 0.0;
  m.emissions.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    Eigen::MatrixXd O(5, 4);
    if (h + 1 < m.horizon) {
      O.col(kGood1) = u1;
      O.col(kGood2) = split;
      O.col(kBad1) = u1;
      O.col(kBad2) = split;
    } else {
      O.col(kGood1) = u1;
      O.col(kGood2) = u1;
      O.col(kBad1) = split;
      O.col(kBad2) = split;
    }
    m.emissions[h] = O;
  }
  m.rewards.assign(m.horizon, Eigen::VectorXd::Zero(5));
  m.rewards[m.horizon - 1][0] = 1.0;
  return m;
}

/// Deterministic-transition lock: fixed initial state g1, the good action
/// keeps good states good, everything else funnels into b2. The funnel
/// target is b2 (which emits u2 at every step) so that the two reachable
/// states per step, g1 and b2, have emission signatures exactly sqrt(2)
/// apart in l2 at every step.
inline PomdpModel make_lock_deterministic(const LockSpec& spec) {
  using namespace lock_detail;
  const auto good = resolve_good_actions(spec);
  PomdpModel m = make_lock_overcomplete(spec);
  m.initial_distribution = Eigen::VectorXd::Zero(4);
  m.initial_distribution[kGood1] = 1.0;
  for (int h = 0; h < m.horizon - 1; ++h) {
    for (int a = 0; a < m.num_actions; ++a) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
      const int from_good = (a == good[h]) ? kGood1 : kBad2;
      T(from_good, kGood1) = 1.0;
      T(from_good, kGood2) = 1.0;
      T(kBad2, kBad1) = 1.0;
      T(kBad2, kBad2) = 1.0;
      m.transitions[h][a] = T;
    }
  }
  return m;
}

inline std::vector<int> lock_good_actions(const LockSpec& spec) {
  return lock_detail::resolve_good_actions(spec);
}

struct RandomUndercomplete {
  PomdpModel model;
  double achieved_alpha = 0.0;  // min over h of sigma_min(emission matrix)
};

inline double min_emission_singular_value(const PomdpModel& m) {
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& O : m.emissions) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(O);
    alpha = std::min(alpha, svd.singularValues().minCoeff());
  }
  return alpha;
}

/// Dirichlet-sampled undercomplete model; each emission matrix is rejection
/// sampled until sigma_min reaches alpha_target.
inline RandomUndercomplete make_random_undercomplete(int S, int O, int A, int H,
                                                     double alpha_target, std::uint64_t seed,
                                                     int rejection_budget = 20000) {
  if (S > O) throw std::invalid_argument("make_random_undercomplete: need S <= O");
  RngStream rng = RngStream(seed).fork("random-undercomplete");
  PomdpModel m;
  m.horizon = H;
  m.num_states = S;
  m.num_actions = A;
  m.num_observations = O;
  m.initial_distribution = rng.dirichlet(S, 1.0);
  m.transitions.assign(H - 1, std::vector<Eigen::MatrixXd>(A));
  for (int h = 0; h < H - 1; ++h)
    for (int a = 0; a < A; ++a) {
      Eigen::MatrixXd T(S, S);
      for (int s = 0; s < S; ++s) T.col(s) = rng.dirichlet(S, 1.0);
      m.transitions[h][a] = T;
    }
  m.emissions.resize(H);
  double alpha = std::numeric_limits<double>::infinity();
  for (int h = 0; h < H; ++h) {
    double sigma = 0.0;
    Eigen::MatrixXd best;
    int tries = 0;
    do {
      if (++tries > rejection_budget)
        throw std::runtime_error("make_random_undercomplete: rejection budget exhausted; "
                                 "alpha_target infeasible for these dimensions");
      Eigen::MatrixXd Ob(O, S);
      for (int s = 0; s < S; ++s) Ob.col(s) = rng.dirichlet(O, 1.0);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ob);
      sigma = svd.singularValues().minCoeff();
      best = Ob;
    } while (sigma < alpha_target);
    m.emissions[h] = best;
    alpha = std::min(alpha, sigma);
  }
  m.rewards.resize(H);
  for (int h = 0; h < H; ++h) {
    m.rewards[h].resize(O);
    for (int o = 0; o < O; ++o) m.rewards[h][o] = rng.uniform();
  }
  return {std::move(m), alpha};
}

/// Random model with emissions w*I + (1-w)/O on an O = S alphabet. With
/// w = 1 the model is an MDP in disguise (observation == state).
inline PomdpModel make_identity_mixture_random(int S, int A, int H, double identity_weight,
                                               std::uint64_t seed) {
  RngStream rng = RngStream(seed).fork("identity-mixture");
  PomdpModel m;
  m.horizon = H;
  m.num_states = S;
  m.num_actions = A;
  m.num_observations = S;
  m.initial_distribution = rng.dirichlet(S, 1.0);
  m.transitions.assign(H - 1, std::vector<Eigen::MatrixXd>(A));
  for (int h = 0; h < H - 1; ++h)
    for (int a = 0; a < A; ++a) {
      Eigen::MatrixXd T(S, S);
      for (int s = 0; s < S; ++s) T.col(s) = rng.dirichlet(S, 1.0);
      m.transitions[h][a] = T;
    }
  const Eigen::MatrixXd emission =
      identity_weight * Eigen::MatrixXd::Identity(S, S) +
      (1.0 - identity_weight) * Eigen::MatrixXd::Constant(S, S, 1.0 / S);
  m.emissions.assign(H, emission);
  m.rewards.resize(H);
  for (int h = 0; h < H; ++h) {
    m.rewards[h].resize(S);
    for (int o = 0; o < S; ++o) m.rewards[h][o] = rng.uniform();
  }
  return m;
}

/// Exact value of the uniform-random-action baseline. Random actions make the
/// latent chain Markov under the action-averaged kernel, so a plain state
/// marginal recursion is exact.
inline double uniform_random_policy_value(const PomdpModel& m) {
  Eigen::VectorXd mu = m.initial_distribution;
  double value = 0.0;
  for (int h = 0; h < m.horizon; ++h) {
    value += m.rewards[h].dot(m.emissions[h] * mu);
    if (h + 1 < m.horizon) {
      Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(m.num_states, m.num_states);
      for (int a = 0; a < m.num_actions; ++a) avg += m.transitions[h][a];
      mu = (avg / m.num_actions) * mu;
    }
  }
  return value;
}

}  // namespace pomdp

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pomdp/instances.hpp"
#include "pomdp/policy.hpp"

using namespace pomdp;

TEST_CASE("overcomplete lock structure and conditioning") {
  LockSpec spec;
  spec.horizon = 3;
  spec.seed = 5;
  const PomdpModel m = make_lock_overcomplete(spec);
  CHECK(validate_model(m).empty());
  CHECK(m.num_states == 4);
  CHECK(m.num_observations == 2);
  // Each emission matrix is two copies of the 2x2 identity side by side, so
  // every singular value equals sqrt(2). (The source construction claims
  // sigma_min = 1; the actual SVD of these 2x4 matrices gives sqrt(2).)
  CHECK_THAT(min_emission_singular_value(m),
             Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("overcomplete lock optimum is the good sequence at value 1/2") {
  LockSpec spec;
  spec.horizon = 3;
  spec.seed = 5;
  const PomdpModel m = make_lock_overcomplete(spec);
  const auto good = lock_good_actions(spec);
  const auto planned = optimal_policy(m);
  CHECK_THAT(planned.second.value, Catch::Matchers::WithinAbs(0.5, 1e-10));
  // the optimal policy plays the good action at every history
  for (int t = 0; t < m.horizon - 1; ++t) {
    std::uint64_t level_size = 1;
    for (int i = 0; i <= t; ++i) level_size *= m.num_observations;
    for (std::uint64_t code = 0; code < level_size; ++code)
      CHECK(planned.first.action_at(t, code) == good[t]);
  }
}

TEST_CASE("any deviation at the first step zeroes the lock value") {
  LockSpec spec;
  spec.horizon = 3;
  spec.seed = 5;
  const PomdpModel m = make_lock_overcomplete(spec);
  const auto good = lock_good_actions(spec);
  std::vector<int> wrong = good;
  wrong[0] = 1 - wrong[0];
  const PolicyTree policy = PolicyTree::constant_actions(m.horizon, m.num_observations, wrong);
  CHECK_THAT(evaluate_policy(m, policy).value, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("undercomplete lock: dimensions, value, and first-step marginal") {
  LockSpec spec;
  spec.horizon = 3;
  spec.seed = 9;
  const PomdpModel m = make_lock_undercomplete(spec);
  CHECK(validate_model(m).empty());
  CHECK(m.num_states == 4);
  CHECK(m.num_observations == 5);
  CHECK(m.num_states <= m.num_observations);
  CHECK_THAT(optimal_policy(m).second.value, Catch::Matchers::WithinAbs(0.5, 1e-10));
  const Eigen::VectorXd marginal = m.emissions[0] * m.initial_distribution;
  CHECK_THAT(marginal[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
  for (int q = 1; q < 5; ++q) CHECK_THAT(marginal[q], Catch::Matchers::WithinAbs(0.125, 1e-12));
}

TEST_CASE("uniform-random baseline value equals the guessing probability") {
  LockSpec spec;
  spec.horizon = 4;
  spec.num_actions = 2;
  spec.seed = 13;
  const PomdpModel m = make_lock_undercomplete(spec);
  const double expected = 0.5 * std::pow(static_cast<double>(spec.num_actions),
                                         -(spec.horizon - 1));
  CHECK_THAT(uniform_random_policy_value(m), Catch::Matchers::WithinAbs(expected, 1e-10));

  // cross-check: a uniform random policy averages the open-loop values
  double avg = 0.0;
  const int A = spec.num_actions;
  for (int c = 0; c < A * A * A; ++c) {
    const std::vector<int> actions = {c % A, (c / A) % A, (c / A / A) % A};
    avg += evaluate_policy(m, PolicyTree::constant_actions(4, 5, actions)).value;
  }
  CHECK_THAT(uniform_random_policy_value(m),
             Catch::Matchers::WithinAbs(avg / (A * A * A), 1e-10));
}

TEST_CASE("deterministic lock: 0/1 dynamics, certain start, value 1") {
  LockSpec spec;
  spec.horizon = 4;
  spec.seed = 3;
  const PomdpModel m = make_lock_deterministic(spec);
  CHECK(validate_model(m).empty());
  for (int s = 0; s < m.num_states; ++s) {
    const double v = m.initial_distribution[s];
    CHECK((v == 0.0 || v == 1.0));
  }
  CHECK(m.initial_distribution.sum() == 1.0);
  for (const auto& step : m.transitions)
    for (const auto& T : step)
      for (int i = 0; i < T.size(); ++i) CHECK((T(i) == 0.0 || T(i) == 1.0));
  CHECK_THAT(optimal_policy(m).second.value, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("deterministic lock separates its two reachable states by sqrt(2)") {
  LockSpec spec;
  spec.horizon = 4;
  spec.seed = 3;
  const PomdpModel m = make_lock_deterministic(spec);
  const auto good = lock_good_actions(spec);
  // reachable states: g1 (index 0) survives the good prefix, b2 (index 3)
  // absorbs everything else
  for (int h = 1; h < m.horizon; ++h) {
    const Eigen::VectorXd diff = m.emissions[h].col(0) - m.emissions[h].col(3);
    CHECK_THAT(diff.norm(), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
  }
  // wrong action at step 0 must land in the absorbing bad state
  const Eigen::VectorXd bad =
      m.transitions[0][1 - good[0]] * m.initial_distribution;
  CHECK(bad[3] == 1.0);
}

TEST_CASE("random undercomplete generator meets its conditioning target") {
  const auto gen = make_random_undercomplete(3, 4, 2, 3, 0.15, 77);
  CHECK(validate_model(gen.model).empty());
  CHECK(gen.achieved_alpha >= 0.15);
  CHECK_THAT(gen.achieved_alpha, Catch::Matchers::WithinAbs(
                                     min_emission_singular_value(gen.model), 1e-12));
  CHECK_THROWS_AS(make_random_undercomplete(3, 2, 2, 3, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_random_undercomplete(3, 3, 2, 3, 0.9, 1, 50), std::runtime_error);
}

TEST_CASE("identity-mixture emissions are well conditioned") {
  const PomdpModel m = make_identity_mixture_random(3, 2, 3, 0.8, 4);
  CHECK(validate_model(m).empty());
  CHECK(min_emission_singular_value(m) >= 0.5);
}

TEST_CASE("single-state emission conditioning is the column norm") {
  const auto gen = make_random_undercomplete(1, 4, 2, 2, 0.0, 12);
  CHECK(validate_model(gen.model).empty());
  for (int h = 0; h < 2; ++h) {
    CHECK_THAT(min_emission_singular_value(gen.model),
               Catch::Matchers::WithinAbs(gen.achieved_alpha, 1e-12));
    CHECK(gen.model.emissions[h].col(0).norm() >= 1.0 / std::sqrt(4.0));
  }
}

TEST_CASE("good action sequences come from the seed and can be pinned") {
  LockSpec a;
  a.horizon = 6;
  a.seed = 1;
  LockSpec b = a;
  b.seed = 2;
  CHECK(lock_good_actions(a) == lock_good_actions(a));
  CHECK(lock_good_actions(a) != lock_good_actions(b));  // seeds 1 and 2 differ here
  LockSpec pinned = a;
  pinned.good_actions = {1, 0, 1, 0, 1};
  CHECK(lock_good_actions(pinned) == std::vector<int>{1, 0, 1, 0, 1});
  pinned.good_actions = {1, 0};
  CHECK_THROWS_AS(make_lock_overcomplete(pinned), std::invalid_argument);
}

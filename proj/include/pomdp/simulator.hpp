#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "pomdp/model.hpp"
#include "pomdp/policy.hpp"
#include "pomdp/rng.hpp"

namespace pomdp {

struct ProbeTriple {
  int prev_obs = kDummyObservation;  // o_{h-1}; dummy when h == 0
  int obs = 0;                       // o_h
  int next_obs = 0;                  // o_{h+1}
};

/// Exact seeded episode simulator. Learners receive only this handle; latent
/// states are exposed solely through the debug recording flag, and every
/// latent access is counted so tests can assert learners never look.
class Simulator {
 public:
  Simulator(PomdpModel model, RngStream rng, bool record_latent = false)
      : model_(std::move(model)), rng_(std::move(rng)), record_latent_(record_latent) {
    require_valid(model_);
  }

  int horizon() const { return model_.horizon; }
  int num_actions() const { return model_.num_actions; }
  int num_observations() const { return model_.num_observations; }
  /// The reward function is public knowledge (a known map from observations
  /// to [0,1]), so reading it is not a latent access.
  double reward(int h, int o) const { return model_.reward(h, o); }
  long episodes_consumed() const { return episodes_; }
  long latent_accesses() const { return latent_accesses_; }

  /// Ground truth, for evaluation code only. Counted like a latent access.
  const PomdpModel& debug_model() {
    ++latent_accesses_;
    return model_;
  }

  /// Samples one full episode under the policy.
  Trajectory sample_episode(const PolicyTree& policy) {
    check_horizon_match(model_, policy);
    ++episodes_;
    Trajectory traj;
    traj.observations.reserve(model_.horizon);
    int s = rng_.categorical(model_.initial_distribution);
    for (int h = 0; h < model_.horizon; ++h) {
      if (record_latent_) {
        ++latent_accesses_;
        traj.latent_states.push_back(s);
      }
      const int o = rng_.categorical(model_.emissions[h].col(s));
      traj.observations.push_back(o);
      traj.total_reward += model_.reward(h, o);
      if (h + 1 < model_.horizon) {
        const int a = policy.action_at(h, policy.encode(traj.observations));
        traj.actions.push_back(a);
        s = rng_.categorical(model_.transition(h, a).col(s));
      }
    }
    return traj;
  }

  /// Probe episode for the moment counts: runs the policy through action
  /// step h-2, takes prev_action at step h-1 and action at step h, and
  /// returns (o_{h-1}, o_h, o_{h+1}). For h == 0 the previous step is the
  /// dummy step: prev_action has no effect and prev_obs is the dummy token.
  /// Requires 0 <= h <= H-2.
  ProbeTriple sample_probe_episode(const PolicyTree& policy, int h, int prev_action, int action) {
    check_horizon_match(model_, policy);
    if (h < 0 || h > model_.horizon - 2)
      throw std::out_of_range("sample_probe_episode: h out of range");
    ++episodes_;
    std::vector<int> obs;
    obs.reserve(h + 2);
    int s = rng_.categorical(model_.initial_distribution);
    for (int t = 0; t <= h + 1; ++t) {
      obs.push_back(rng_.categorical(model_.emissions[t].col(s)));
      if (t > h) break;
      int a;
      if (t < h - 1)
        a = policy.action_at(t, policy.encode(obs));
      else if (t == h - 1)
        a = prev_action;
      else
        a = action;
      s = rng_.categorical(model_.transition(t, a).col(s));
    }
    ProbeTriple triple;
    triple.prev_obs = (h == 0) ? kDummyObservation : obs[h - 1];
    triple.obs = obs[h];
    triple.next_obs = obs[h + 1];
    return triple;
  }

  /// Executes a fixed action sequence and returns the observations at steps
  /// 0..upto_obs. Used by the deterministic-transition learner.
  std::vector<int> run_plan(std::span<const int> actions, int upto_obs) {
    if (upto_obs < 0 || upto_obs >= model_.horizon)
      throw std::out_of_range("run_plan: upto_obs out of range");
    if (static_cast<int>(actions.size()) < upto_obs)
      throw std::invalid_argument("run_plan: not enough actions");
    ++episodes_;
    std::vector<int> obs;
    obs.reserve(upto_obs + 1);
    int s = rng_.categorical(model_.initial_distribution);
    for (int t = 0; t <= upto_obs; ++t) {
      obs.push_back(rng_.categorical(model_.emissions[t].col(s)));
      if (t < upto_obs) s = rng_.categorical(model_.transition(t, actions[t]).col(s));
    }
    return obs;
  }

 private:
  PomdpModel model_;
  RngStream rng_;
  bool record_latent_;
  long episodes_ = 0;
  long latent_accesses_ = 0;
};

}  // namespace pomdp

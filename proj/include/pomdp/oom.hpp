#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "pomdp/model.hpp"

namespace pomdp {

/// Observable-operator form of an undercomplete model: an initial vector
/// b0 = O_0 mu1 and per-(step, action, observation) OxO operators
///   B_h(a, o) = O_{h+1} T_h(a) diag(O_h(o | .)) pinv(O_h).
/// Products of these against b0 reproduce exact sequence probabilities
/// without reference to the latent state space.
struct OomParams {
  int horizon = 0;
  int num_actions = 0;
  int num_observations = 0;
  int num_states = 0;
  Eigen::VectorXd initial_vector;                                   // length O
  std::vector<std::vector<std::vector<Eigen::MatrixXd>>> operators;  // [H-1][A][O], OxO
  double min_emission_singular_value = 0.0;

  const Eigen::MatrixXd& op(int h, int a, int o) const { return operators[h][a][o]; }
};

/// Moore-Penrose pseudo-inverse with singular values below
/// 1e-12 * sigma_max treated as zero.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * (sv.size() > 0 ? sv[0] : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Builds the operator parameters of a valid undercomplete model. Throws if
/// S > O, or if sigma_floor > 0 and some emission matrix has
/// sigma_min < sigma_floor (the operators would not be well conditioned).
inline OomParams build_oom(const PomdpModel& m, double sigma_floor = 0.0) {
  if (m.num_states > m.num_observations)
    throw std::invalid_argument("build_oom: overcomplete model (S > O)");
  OomParams p;
  p.horizon = m.horizon;
  p.num_actions = m.num_actions;
  p.num_observations = m.num_observations;
  p.num_states = m.num_states;
  p.initial_vector = m.emissions[0] * m.initial_distribution;

  std::vector<Eigen::MatrixXd> pinv(m.horizon);
  double alpha = std::numeric_limits<double>::infinity();
  for (int h = 0; h < m.horizon; ++h) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.emissions[h]);
    alpha = std::min(alpha, svd.singularValues().minCoeff());
    pinv[h] = pseudo_inverse(m.emissions[h]);
  }
  p.min_emission_singular_value = alpha;
  if (sigma_floor > 0.0 && alpha < sigma_floor)
    throw std::invalid_argument("build_oom: emission sigma_min " + std::to_string(alpha) +
                                " below floor " + std::to_string(sigma_floor));

  p.operators.assign(m.horizon - 1,
                     std::vector<std::vector<Eigen::MatrixXd>>(
                         m.num_actions, std::vector<Eigen::MatrixXd>(m.num_observations)));
  for (int h = 0; h < m.horizon - 1; ++h)
    for (int a = 0; a < m.num_actions; ++a)
      for (int o = 0; o < m.num_observations; ++o)
        p.operators[h][a][o] = m.emissions[h + 1] * m.transitions[h][a] *
                               m.emission_row(h, o).asDiagonal() * pinv[h];
  return p;
}

namespace oom_detail {

inline double clamp_probability(double v, const char* where) {
  if (v < 0.0) {
    if (v < -1e-10)
      throw std::runtime_error(std::string(where) +
                               ": probability below round-off tolerance: " + std::to_string(v));
    return 0.0;
  }
  return v;
}

}  // namespace oom_detail

/// Unnormalized belief over observations after the prefix
/// (o_0, a_0), ..., (o_{L-1}, a_{L-1}): the operator product applied to b0.
/// Entry o of the result is the joint probability of seeing the prefix and
/// then o at step L, under the fixed action sequence.
inline Eigen::VectorXd oom_belief(const OomParams& p, std::span<const int> observations,
                                  std::span<const int> actions) {
  if (observations.size() != actions.size())
    throw std::invalid_argument("oom_belief: need one action per observation");
  if (static_cast<int>(actions.size()) > p.horizon - 1)
    throw std::invalid_argument("oom_belief: prefix longer than horizon");
  Eigen::VectorXd v = p.initial_vector;
  for (std::size_t t = 0; t < observations.size(); ++t)
    v = p.op(static_cast<int>(t), actions[t], observations[t]) * v;
  return v;
}

/// Exact probability of the observation sequence o_0..o_{L-1} under the fixed
/// action sequence a_0..a_{L-2}.
inline double oom_sequence_prob(const OomParams& p, std::span<const int> observations,
                                std::span<const int> actions) {
  if (observations.empty()) throw std::invalid_argument("oom_sequence_prob: empty sequence");
  if (actions.size() + 1 != observations.size())
    throw std::invalid_argument("oom_sequence_prob: need one fewer action than observations");
  const Eigen::VectorXd v =
      oom_belief(p, observations.subspan(0, observations.size() - 1), actions);
  return oom_detail::clamp_probability(v[observations.back()], "oom_sequence_prob");
}

}  // namespace pomdp

#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "pomdp/model.hpp"
#include "pomdp/moments.hpp"
#include "pomdp/oom.hpp"

namespace pomdp {

/// Radii for the data-driven confidence set. alpha scales the operator-side
/// radius; sigma_floor is the hard lower bound imposed on candidate emission
/// singular values (set to zero for instances that are themselves rank
/// deficient, where only the radius scaling is meaningful).
struct ConfidenceSpec {
  double alpha = 1.0;
  double c1 = 4.0;
  long num_iterations = 1;  // K, enters only through the log factor
  double sigma_floor = -1.0;  // negative => use alpha

  double floor() const { return sigma_floor < 0.0 ? alpha : sigma_floor; }

  double log_factor(int num_actions, int num_observations, int horizon) const {
    return std::log(static_cast<double>(num_iterations) * num_actions * num_observations *
                    horizon);
  }

  /// Radius for the initial-vector constraint after k recorded episodes.
  double beta(long k, int num_actions, int num_observations, int horizon) const {
    if (k <= 0) return 0.0;
    return c1 * std::sqrt(static_cast<double>(k) *
                          log_factor(num_actions, num_observations, horizon));
  }

  /// Radius for the operator constraints after k recorded probes per cell.
  double gamma(long k, int num_states, int num_actions, int num_observations, int horizon) const {
    if (alpha <= 0.0) throw std::invalid_argument("ConfidenceSpec: alpha must be positive");
    return std::sqrt(static_cast<double>(num_states)) *
           beta(k, num_actions, num_observations, horizon) / alpha;
  }
};

/// One constraint evaluation, normalized to the form lhs <= threshold.
struct ConstraintSlack {
  std::string id;
  double lhs = 0.0;
  double threshold = 0.0;

  bool satisfied() const { return lhs <= threshold; }
  double slack() const { return threshold - lhs; }
};

struct MembershipReport {
  bool member = false;
  std::vector<ConstraintSlack> constraints;

  std::vector<double> slack_profile() const {
    std::vector<double> out;
    out.reserve(constraints.size());
    for (const auto& c : constraints) out.push_back(c.slack());
    return out;
  }

  std::string to_json() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "{\"member\":" << (member ? "true" : "false") << ",\"constraints\":[";
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& c = constraints[i];
      os << (i ? "," : "") << "{\"id\":\"" << c.id << "\",\"lhs\":" << c.lhs
         << ",\"threshold\":" << c.threshold
         << ",\"satisfied\":" << (c.satisfied() ? "true" : "false") << "}";
    }
    os << "]}";
    return os.str();
  }
};

/// Evaluates every constraint of the confidence set for one candidate against
/// the counts gathered over k iterations:
///   - sigma_min(emissions) >= floor, per step (stored as floor - sigma <= 0);
///   - || k * b0 - initial counts ||_2 <= beta_k;
///   - || B_h(a, o) N(h, a, a_prev) - M(h, o, a, a_prev) ||_F <= gamma_k
///     for every step, action pair, and middle symbol.
inline MembershipReport check_membership(const PomdpModel& candidate, const OomParams& oom,
                                         const CountTables& counts, long k,
                                         const ConfidenceSpec& spec) {
  if (candidate.horizon != counts.horizon() || candidate.num_actions != counts.num_actions() ||
      candidate.num_observations != counts.num_observations())
    throw std::invalid_argument("check_membership: candidate/count dimension mismatch");
  const int H = candidate.horizon, A = candidate.num_actions, O = candidate.num_observations;
  MembershipReport report;
  report.member = true;
  auto add = [&report](std::string id, double lhs, double threshold) {
    report.constraints.push_back({std::move(id), lhs, threshold});
    if (lhs > threshold) report.member = false;
  };

  const double floor = spec.floor();
  for (int h = 0; h < H; ++h) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(candidate.emissions[h]);
    const double sigma = svd.singularValues().minCoeff();
    add("sigma_min h=" + std::to_string(h), floor - sigma, 0.0);
  }

  const double beta = spec.beta(k, A, O, H);
  const double gamma = spec.gamma(k, candidate.num_states, A, O, H);

  const Eigen::VectorXd initial_residual =
      static_cast<double>(k) * oom.initial_vector - counts.initial_counts().cast<double>();
  add("initial", initial_residual.norm(), beta);

  for (int h = 0; h < H - 1; ++h)
    for (int a = 0; a < A; ++a)
      for (int ap = 0; ap < A; ++ap)
        for (int o = 0; o < O; ++o) {
          const Eigen::MatrixXd residual =
              oom.op(h, a, o) * counts.pair_count_d(h, a, ap) - counts.triple_count_d(h, o, a, ap);
          add("op h=" + std::to_string(h) + " a=" + std::to_string(a) +
                  " ap=" + std::to_string(ap) + " o=" + std::to_string(o),
              residual.norm(), gamma);
        }
  return report;
}

}  // namespace pomdp

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

namespace pomdp {

/// Sentinel for the fixed observation at the dummy step 0. It lives outside
/// the observation alphabet [0, O) and never appears in emission matrices.
inline constexpr int kDummyObservation = -1;

/// Episodic tabular POMDP with nonstationary dynamics, emissions, and
/// rewards. Steps are 0-based: observations at steps 0..H-1, transitions at
/// steps 0..H-2. transitions[h][a] is column-stochastic SxS with
/// (s', s) = Pr(s' | s, a); emissions[h] is column-stochastic OxS with
/// (o, s) = Pr(o | s); rewards[h] is a length-O vector with entries in [0,1].
struct PomdpModel {
  int horizon = 0;           // H
  int num_states = 0;        // S
  int num_actions = 0;       // A
  int num_observations = 0;  // O

  std::vector<std::vector<Eigen::MatrixXd>> transitions;  // [H-1][A], SxS
  std::vector<Eigen::MatrixXd> emissions;                 // [H], OxS
  Eigen::VectorXd initial_distribution;                   // length S
  std::vector<Eigen::VectorXd> rewards;                   // [H], length O

  const Eigen::MatrixXd& transition(int h, int a) const { return transitions[h][a]; }
  const Eigen::MatrixXd& emission(int h) const { return emissions[h]; }
  double reward(int h, int o) const { return rewards[h][o]; }

  /// Row o of emissions[h] as a length-S vector (the diag argument of the
  /// observable operators).
  Eigen::VectorXd emission_row(int h, int o) const {
    return emissions[h].row(o).transpose();
  }

  bool same_dimensions(const PomdpModel& other) const {
    return horizon == other.horizon && num_states == other.num_states &&
           num_actions == other.num_actions && num_observations == other.num_observations;
  }
};

/// One sampled episode. Latent states are recorded only when the simulator's
/// debug flag is set; learners never read them.
struct Trajectory {
  std::vector<int> observations;  // o_0..o_{H-1}
  std::vector<int> actions;       // a_0..a_{H-2}
  double total_reward = 0.0;
  std::vector<int> latent_states;  // empty unless debug recording is on
};

inline std::string describe_index(int h, int a, int s) {
  std::ostringstream os;
  os << "(h=" << h << ", a=" << a << ", s=" << s << ")";
  return os.str();
}

/// Checks all structural invariants. Returns a human-readable violation list;
/// empty iff the model is valid. Never throws.
inline std::vector<std::string> validate_model(const PomdpModel& m) {
  std::vector<std::string> out;
  const double tol = 1e-12;
  if (m.horizon < 1 || m.num_states < 1 || m.num_actions < 1 || m.num_observations < 1) {
    out.push_back("dimensions must be positive");
    return out;
  }
  if (static_cast<int>(m.transitions.size()) != m.horizon - 1)
    out.push_back("transitions must have H-1 steps");
  if (static_cast<int>(m.emissions.size()) != m.horizon)
    out.push_back("emissions must have H steps");
  if (static_cast<int>(m.rewards.size()) != m.horizon)
    out.push_back("rewards must have H steps");
  if (m.initial_distribution.size() != m.num_states)
    out.push_back("initial distribution has wrong length");
  if (!out.empty()) return out;

  for (int h = 0; h < m.horizon - 1; ++h) {
    if (static_cast<int>(m.transitions[h].size()) != m.num_actions) {
      out.push_back("transition step " + std::to_string(h) + " must have A matrices");
      continue;
    }
    for (int a = 0; a < m.num_actions; ++a) {
      const auto& T = m.transitions[h][a];
      if (T.rows() != m.num_states || T.cols() != m.num_states) {
        out.push_back("transition " + describe_index(h, a, -1) + " has wrong shape");
        continue;
      }
      for (int s = 0; s < m.num_states; ++s) {
        if (T.col(s).minCoeff() < 0.0)
          out.push_back("negative transition probability at " + describe_index(h, a, s));
        if (std::abs(T.col(s).sum() - 1.0) > tol)
          out.push_back("transition column does not sum to 1 at " + describe_index(h, a, s));
      }
    }
  }
  for (int h = 0; h < m.horizon; ++h) {
    const auto& O = m.emissions[h];
    if (O.rows() != m.num_observations || O.cols() != m.num_states) {
      out.push_back("emission matrix at h=" + std::to_string(h) + " has wrong shape");
      continue;
    }
    for (int s = 0; s < m.num_states; ++s) {
      if (O.col(s).minCoeff() < 0.0)
        out.push_back("negative emission probability at " + describe_index(h, -1, s));
      if (std::abs(O.col(s).sum() - 1.0) > tol)
        out.push_back("emission column does not sum to 1 at " + describe_index(h, -1, s));
    }
  }
  if (m.initial_distribution.minCoeff() < 0.0)
    out.push_back("negative initial probability");
  if (std::abs(m.initial_distribution.sum() - 1.0) > tol)
    out.push_back("initial distribution does not sum to 1");
  for (int h = 0; h < m.horizon; ++h) {
    if (m.rewards[h].size() != m.num_observations) {
      out.push_back("reward vector at h=" + std::to_string(h) + " has wrong length");
      continue;
    }
    if (m.rewards[h].minCoeff() < 0.0 || m.rewards[h].maxCoeff() > 1.0)
      out.push_back("reward outside [0,1] at h=" + std::to_string(h));
  }
  return out;
}

inline void require_valid(const PomdpModel& m) {
  const auto violations = validate_model(m);
  if (!violations.empty()) throw std::invalid_argument("invalid model: " + violations.front());
}

// ---------------------------------------------------------------------------
// Plain-text serialization. Round-trips doubles exactly (max_digits10).

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (c) os << ' ';
      os << mat(r, c);
    }
    os << '\n';
  }
}

inline void write_model(std::ostream& os, const PomdpModel& m) {
  os << std::setprecision(17);
  os << "pomdp-model v1\n";
  os << "horizon " << m.horizon << "\n";
  os << "states " << m.num_states << "\n";
  os << "actions " << m.num_actions << "\n";
  os << "observations " << m.num_observations << "\n";
  os << "mu1\n";
  for (int s = 0; s < m.num_states; ++s) os << (s ? " " : "") << m.initial_distribution[s];
  os << "\n";
  for (int h = 0; h < m.horizon - 1; ++h)
    for (int a = 0; a < m.num_actions; ++a) {
      os << "transition " << h << ' ' << a << "\n";
      write_matrix(os, m.transitions[h][a]);
    }
  for (int h = 0; h < m.horizon; ++h) {
    os << "emission " << h << "\n";
    write_matrix(os, m.emissions[h]);
  }
  for (int h = 0; h < m.horizon; ++h) {
    os << "reward " << h << "\n";
    for (int o = 0; o < m.num_observations; ++o) os << (o ? " " : "") << m.rewards[h][o];
    os << "\n";
  }
}

inline PomdpModel read_model(std::istream& is) {
  auto expect = [&is](const std::string& token) {
    std::string got;
    is >> got;
    if (got != token) throw std::runtime_error("model parse: expected '" + token + "', got '" + got + "'");
  };
  expect("pomdp-model");
  expect("v1");
  PomdpModel m;
  expect("horizon");
  is >> m.horizon;
  expect("states");
  is >> m.num_states;
  expect("actions");
  is >> m.num_actions;
  expect("observations");
  is >> m.num_observations;
  if (!is || m.horizon < 1 || m.num_states < 1 || m.num_actions < 1 || m.num_observations < 1)
    throw std::runtime_error("model parse: bad dimensions");
  expect("mu1");
  m.initial_distribution.resize(m.num_states);
  for (int s = 0; s < m.num_states; ++s) is >> m.initial_distribution[s];
  m.transitions.assign(m.horizon - 1, std::vector<Eigen::MatrixXd>(m.num_actions));
  for (int h = 0; h < m.horizon - 1; ++h)
    for (int a = 0; a < m.num_actions; ++a) {
      int hh, aa;
      expect("transition");
      is >> hh >> aa;
      if (hh != h || aa != a) throw std::runtime_error("model parse: transition order");
      auto& T = m.transitions[h][a];
      T.resize(m.num_states, m.num_states);
      for (int r = 0; r < m.num_states; ++r)
        for (int c = 0; c < m.num_states; ++c) is >> T(r, c);
    }
  m.emissions.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    int hh;
    expect("emission");
    is >> hh;
    if (hh != h) throw std::runtime_error("model parse: emission order");
    auto& O = m.emissions[h];
    O.resize(m.num_observations, m.num_states);
    for (int r = 0; r < m.num_observations; ++r)
      for (int c = 0; c < m.num_states; ++c) is >> O(r, c);
  }
  m.rewards.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    int hh;
    expect("reward");
    is >> hh;
    if (hh != h) throw std::runtime_error("model parse: reward order");
    m.rewards[h].resize(m.num_observations);
    for (int o = 0; o < m.num_observations; ++o) is >> m.rewards[h][o];
  }
  if (!is) throw std::runtime_error("model parse: truncated input");
  return m;
}

inline std::string model_to_string(const PomdpModel& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

inline PomdpModel model_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_model(is);
}

}  // namespace pomdp

#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pomdp/model.hpp"
#include "pomdp/simulator.hpp"

namespace pomdp {

/// Integer count tables for the moment constraints. For each probe step
/// h in [0, H-2] and action pair (a, a_prev):
///   pair counts   N(h, a, a_prev)    accumulate e_{o_h} e_{o_{h-1}}^T,
///   triple counts M(h, o, a, a_prev) accumulate e_{o_{h+1}} e_{o_{h-1}}^T
///                                    on episodes whose middle symbol is o.
/// At h == 0 the previous observation is the dummy token and is stored in
/// column 0; every other column stays identically zero there.
/// Initial counts tally o_0 over the plain (non-probe) episodes.
class CountTables {
 public:
  CountTables() = default;
  CountTables(int horizon, int num_actions, int num_observations)
      : horizon_(horizon), num_actions_(num_actions), num_observations_(num_observations) {
    if (horizon < 2 || num_actions < 1 || num_observations < 1)
      throw std::invalid_argument("CountTables: bad dimensions");
    initial_counts_ = Eigen::VectorXi::Zero(num_observations);
    pair_counts_.assign(
        horizon - 1, std::vector<std::vector<Eigen::MatrixXi>>(
                         num_actions, std::vector<Eigen::MatrixXi>(
                                          num_actions, Eigen::MatrixXi::Zero(num_observations,
                                                                             num_observations))));
    triple_counts_.assign(
        horizon - 1,
        std::vector<std::vector<std::vector<Eigen::MatrixXi>>>(
            num_observations,
            std::vector<std::vector<Eigen::MatrixXi>>(
                num_actions, std::vector<Eigen::MatrixXi>(
                                 num_actions, Eigen::MatrixXi::Zero(num_observations,
                                                                    num_observations)))));
  }

  int horizon() const { return horizon_; }
  int num_actions() const { return num_actions_; }
  int num_observations() const { return num_observations_; }
  long initial_episodes() const { return initial_episodes_; }
  const Eigen::VectorXi& initial_counts() const { return initial_counts_; }

  void record_initial(int o0) {
    check_obs(o0);
    ++initial_counts_[o0];
    ++initial_episodes_;
  }

  void record_probe(int h, int action, int prev_action, const ProbeTriple& t) {
    if (h < 0 || h >= horizon_ - 1) throw std::out_of_range("record_probe: h out of range");
    check_action(action);
    check_action(prev_action);
    check_obs(t.obs);
    check_obs(t.next_obs);
    int prev_col;
    if (h == 0) {
      if (t.prev_obs != kDummyObservation)
        throw std::invalid_argument("record_probe: expected dummy prev_obs at h=0");
      prev_col = 0;
    } else {
      check_obs(t.prev_obs);
      prev_col = t.prev_obs;
    }
    ++pair_counts_[h][action][prev_action](t.obs, prev_col);
    ++triple_counts_[h][t.obs][action][prev_action](t.next_obs, prev_col);
  }

  const Eigen::MatrixXi& pair_count(int h, int action, int prev_action) const {
    return pair_counts_[h][action][prev_action];
  }
  const Eigen::MatrixXi& triple_count(int h, int obs, int action, int prev_action) const {
    return triple_counts_[h][obs][action][prev_action];
  }

  Eigen::MatrixXd pair_count_d(int h, int action, int prev_action) const {
    return pair_counts_[h][action][prev_action].cast<double>();
  }
  Eigen::MatrixXd triple_count_d(int h, int obs, int action, int prev_action) const {
    return triple_counts_[h][obs][action][prev_action].cast<double>();
  }

  bool operator==(const CountTables& other) const {
    return horizon_ == other.horizon_ && num_actions_ == other.num_actions_ &&
           num_observations_ == other.num_observations_ &&
           initial_episodes_ == other.initial_episodes_ &&
           initial_counts_ == other.initial_counts_ && pair_counts_ == other.pair_counts_ &&
           triple_counts_ == other.triple_counts_;
  }

 private:
  void check_obs(int o) const {
    if (o < 0 || o >= num_observations_) throw std::out_of_range("CountTables: obs out of range");
  }
  void check_action(int a) const {
    if (a < 0 || a >= num_actions_) throw std::out_of_range("CountTables: action out of range");
  }

  int horizon_ = 0;
  int num_actions_ = 0;
  int num_observations_ = 0;
  long initial_episodes_ = 0;
  Eigen::VectorXi initial_counts_;
  std::vector<std::vector<std::vector<Eigen::MatrixXi>>> pair_counts_;          // [h][a][a_prev]
  std::vector<std::vector<std::vector<std::vector<Eigen::MatrixXi>>>> triple_counts_;  // [h][o][a][a_prev]

  friend void write_count_tables(std::ostream&, const CountTables&);
  friend CountTables read_count_tables(std::istream&);
};

/// Population pair moment at probe step h given the distribution mu_prev of
/// the latent state at step max(h-1, 0):
///   h >= 1: P = O_h T_{h-1}(a_prev) diag(mu_prev) O_{h-1}^T
///   h == 0: only the dummy column is live; its value is O_0 mu1.
inline Eigen::MatrixXd exact_pair_moment(const PomdpModel& m, int h, int prev_action,
                                         const Eigen::VectorXd& mu_prev) {
  const int O = m.num_observations;
  if (h == 0) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(O, O);
    P.col(0) = m.emissions[0] * mu_prev;
    return P;
  }
  return m.emissions[h] * m.transitions[h - 1][prev_action] * mu_prev.asDiagonal() *
         m.emissions[h - 1].transpose();
}

/// Population triple moment at probe step h with middle symbol o:
///   h >= 1: Q(o) = O_{h+1} T_h(a) diag(O_h(o|.)) T_{h-1}(a_prev)
///                  diag(mu_prev) O_{h-1}^T
///   h == 0: only the dummy column is live; its value is
///           O_1 T_0(a) diag(O_0(o|.)) mu1.
inline Eigen::MatrixXd exact_triple_moment(const PomdpModel& m, int h, int obs, int action,
                                           int prev_action, const Eigen::VectorXd& mu_prev) {
  const int O = m.num_observations;
  const Eigen::MatrixXd middle =
      m.emissions[h + 1] * m.transitions[h][action] * m.emission_row(h, obs).asDiagonal();
  if (h == 0) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(O, O);
    Q.col(0) = middle * mu_prev;
    return Q;
  }
  return middle * m.transitions[h - 1][prev_action] * mu_prev.asDiagonal() *
         m.emissions[h - 1].transpose();
}

// ---------------------------------------------------------------------------
// Plain-text serialization.

inline void write_count_tables(std::ostream& os, const CountTables& t) {
  os << "count-tables v1\n";
  os << "horizon " << t.horizon_ << "\n";
  os << "actions " << t.num_actions_ << "\n";
  os << "observations " << t.num_observations_ << "\n";
  os << "initial_episodes " << t.initial_episodes_ << "\n";
  os << "initial";
  for (int o = 0; o < t.num_observations_; ++o) os << ' ' << t.initial_counts_[o];
  os << "\n";
  auto write_mat = [&os](const Eigen::MatrixXi& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) os << (c ? " " : "") << mat(r, c);
      os << '\n';
    }
  };
  for (int h = 0; h < t.horizon_ - 1; ++h)
    for (int a = 0; a < t.num_actions_; ++a)
      for (int ap = 0; ap < t.num_actions_; ++ap) {
        os << "pair " << h << ' ' << a << ' ' << ap << "\n";
        write_mat(t.pair_counts_[h][a][ap]);
      }
  for (int h = 0; h < t.horizon_ - 1; ++h)
    for (int o = 0; o < t.num_observations_; ++o)
      for (int a = 0; a < t.num_actions_; ++a)
        for (int ap = 0; ap < t.num_actions_; ++ap) {
          os << "triple " << h << ' ' << o << ' ' << a << ' ' << ap << "\n";
          write_mat(t.triple_counts_[h][o][a][ap]);
        }
}

inline CountTables read_count_tables(std::istream& is) {
  auto expect = [&is](const std::string& token) {
    std::string got;
    is >> got;
    if (got != token)
      throw std::runtime_error("count parse: expected '" + token + "', got '" + got + "'");
  };
  expect("count-tables");
  expect("v1");
  int H, A, O;
  long episodes;
  expect("horizon");
  is >> H;
  expect("actions");
  is >> A;
  expect("observations");
  is >> O;
  expect("initial_episodes");
  is >> episodes;
  if (!is) throw std::runtime_error("count parse: bad header");
  CountTables t(H, A, O);
  t.initial_episodes_ = episodes;
  expect("initial");
  for (int o = 0; o < O; ++o) is >> t.initial_counts_[o];
  auto read_mat = [&is, O](Eigen::MatrixXi& mat) {
    for (int r = 0; r < O; ++r)
      for (int c = 0; c < O; ++c) is >> mat(r, c);
  };
  for (int h = 0; h < H - 1; ++h)
    for (int a = 0; a < A; ++a)
      for (int ap = 0; ap < A; ++ap) {
        int hh, aa, pp;
        expect("pair");
        is >> hh >> aa >> pp;
        if (hh != h || aa != a || pp != ap) throw std::runtime_error("count parse: pair order");
        read_mat(t.pair_counts_[h][a][ap]);
      }
  for (int h = 0; h < H - 1; ++h)
    for (int o = 0; o < O; ++o)
      for (int a = 0; a < A; ++a)
        for (int ap = 0; ap < A; ++ap) {
          int hh, oo, aa, pp;
          expect("triple");
          is >> hh >> oo >> aa >> pp;
          if (hh != h || oo != o || aa != a || pp != ap)
            throw std::runtime_error("count parse: triple order");
          read_mat(t.triple_counts_[h][o][a][ap]);
        }
  if (!is) throw std::runtime_error("count parse: truncated input");
  return t;
}

inline std::string count_tables_to_string(const CountTables& t) {
  std::ostringstream os;
  write_count_tables(os, t);
  return os.str();
}

inline CountTables count_tables_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_count_tables(is);
}

}  // namespace pomdp

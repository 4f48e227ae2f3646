#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pomdp/confidence.hpp"
#include "pomdp/model.hpp"
#include "pomdp/moments.hpp"
#include "pomdp/oom.hpp"
#include "pomdp/policy.hpp"
#include "pomdp/rng.hpp"
#include "pomdp/simulator.hpp"

namespace pomdp {

/// One candidate model with everything the optimistic loop needs precomputed:
/// its operator parameters, its emission conditioning, and its own optimal
/// policy and value.
struct CandidateEntry {
  int id = 0;
  std::string tag;
  PomdpModel model;
  OomParams oom;
  double sigma_min = 0.0;
  PolicyTree policy;
  double value = 0.0;
};

class EmptyConfidenceSet : public std::runtime_error {
 public:
  explicit EmptyConfidenceSet(const std::string& what) : std::runtime_error(what) {}
};

/// Finite surrogate for the optimistic argmax: the selection step scans an
/// explicit candidate list instead of optimizing over all model parameters.
class CandidatePool {
 public:
  CandidatePool() = default;

  int add(std::string tag, PomdpModel model,
          long plan_budget = kDefaultPlanBudget) {
    CandidateEntry e;
    e.id = static_cast<int>(entries_.size());
    e.tag = std::move(tag);
    e.oom = build_oom(model);
    e.sigma_min = e.oom.min_emission_singular_value;
    auto planned = optimal_policy(model, plan_budget);
    e.policy = std::move(planned.first);
    e.value = planned.second.value;
    e.model = std::move(model);
    entries_.push_back(std::move(e));
    return entries_.back().id;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const CandidateEntry& entry(int id) const { return entries_.at(id); }
  const std::vector<CandidateEntry>& entries() const { return entries_; }

 private:
  std::vector<CandidateEntry> entries_;
};

struct SelectionResult {
  int candidate_id = -1;
  double value = 0.0;
  int num_feasible = 0;
};

/// Highest-value candidate whose membership check passes; ties broken by the
/// smallest candidate id. Throws EmptyConfidenceSet when nothing passes.
inline SelectionResult optimistic_select(const CandidatePool& pool, const CountTables& counts,
                                         long k, const ConfidenceSpec& spec) {
  if (pool.empty()) throw std::invalid_argument("optimistic_select: empty pool");
  SelectionResult best;
  for (const auto& e : pool.entries()) {
    const MembershipReport report = check_membership(e.model, e.oom, counts, k, spec);
    if (!report.member) continue;
    ++best.num_feasible;
    if (best.candidate_id < 0 || e.value > best.value) {
      best.candidate_id = e.id;
      best.value = e.value;
    }
  }
  if (best.candidate_id < 0)
    throw EmptyConfidenceSet("optimistic_select: no feasible candidate at k=" +
                             std::to_string(k));
  return best;
}

struct TraceRow {
  long k = 0;
  int candidate_id = -1;
  double v_optimistic = 0.0;
  double v_true = std::numeric_limits<double>::quiet_NaN();
  double subopt = std::numeric_limits<double>::quiet_NaN();
  double cum_subopt = std::numeric_limits<double>::quiet_NaN();
  int n_feasible_candidates = 0;
};

struct OomUcbResult {
  PolicyTree output_policy;
  int output_candidate_id = -1;
  long output_iteration = 0;  // 1-based iteration whose policy was returned
  std::vector<TraceRow> trace;
  long episodes_consumed = 0;
};

/// Optimistic exploration loop. Iteration k selects the best candidate that
/// is consistent with the counts gathered over the first k-1 iterations, runs
/// its optimal policy to collect one plain episode (for the initial-vector
/// counts) plus one probe episode per (step, action, previous action), and
/// finally returns the policy of a uniformly random iteration.
///
/// eval_model, when provided, is used only to fill the diagnostic v_true /
/// suboptimality columns of the trace; the learner itself never touches it.
inline OomUcbResult run_oom_ucb(Simulator& env, const CandidatePool& pool, long num_iterations,
                                ConfidenceSpec spec, RngStream rng,
                                const PomdpModel* eval_model = nullptr,
                                double optimal_value = std::numeric_limits<double>::quiet_NaN(),
                                long eval_plan_budget = kDefaultPlanBudget) {
  if (num_iterations < 1) throw std::invalid_argument("run_oom_ucb: need at least 1 iteration");
  spec.num_iterations = num_iterations;
  const int H = env.horizon(), A = env.num_actions(), O = env.num_observations();
  const long episodes_before = env.episodes_consumed();

  CountTables counts(H, A, O);
  std::vector<int> selected_ids;
  selected_ids.reserve(num_iterations);
  std::vector<TraceRow> trace;
  trace.reserve(num_iterations);
  double cum_subopt = 0.0;

  for (long k = 1; k <= num_iterations; ++k) {
    const SelectionResult sel = optimistic_select(pool, counts, k - 1, spec);
    const CandidateEntry& e = pool.entry(sel.candidate_id);
    selected_ids.push_back(sel.candidate_id);

    TraceRow row;
    row.k = k;
    row.candidate_id = sel.candidate_id;
    row.v_optimistic = sel.value;
    row.n_feasible_candidates = sel.num_feasible;
    if (eval_model != nullptr) {
      row.v_true = evaluate_policy(*eval_model, e.policy, eval_plan_budget).value;
      row.subopt = optimal_value - row.v_true;
      cum_subopt += row.subopt;
      row.cum_subopt = cum_subopt;
    }

    counts.record_initial(env.sample_episode(e.policy).observations[0]);
    for (int h = 0; h < H - 1; ++h)
      for (int a = 0; a < A; ++a)
        for (int ap = 0; ap < A; ++ap)
          counts.record_probe(h, a, ap, env.sample_probe_episode(e.policy, h, ap, a));

    trace.push_back(row);
  }

  OomUcbResult result;
  result.trace = std::move(trace);
  const long pick = rng.uniform_int(static_cast<int>(num_iterations));
  result.output_iteration = pick + 1;
  result.output_candidate_id = selected_ids[pick];
  result.output_policy = pool.entry(result.output_candidate_id).policy;
  result.episodes_consumed = env.episodes_consumed() - episodes_before;
  return result;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << std::setprecision(17);
  os << "# oom-ucb-trace v1\n";
  os << "k,candidate_id,v_optimistic,v_true,subopt,cum_subopt,n_feasible_candidates\n";
  for (const auto& r : trace)
    os << r.k << ',' << r.candidate_id << ',' << r.v_optimistic << ',' << r.v_true << ','
       << r.subopt << ',' << r.cum_subopt << ',' << r.n_feasible_candidates << '\n';
}

// ---------------------------------------------------------------------------
// Pool builders.

namespace pool_detail {

/// All probability vectors of the given length whose entries are multiples
/// of 1/resolution.
inline std::vector<Eigen::VectorXd> simplex_grid(int length, int resolution) {
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXi parts = Eigen::VectorXi::Zero(length);
  // enumerate compositions of `resolution` into `length` parts
  auto recurse = [&](auto&& self, int idx, int remaining) -> void {
    if (idx == length - 1) {
      parts[idx] = remaining;
      out.push_back(parts.cast<double>() / resolution);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      parts[idx] = v;
      self(self, idx + 1, remaining - v);
    }
  };
  recurse(recurse, 0, resolution);
  return out;
}

}  // namespace pool_detail

/// Exhaustive grid pool: every model whose initial distribution, transition
/// columns, and emission columns have entries that are multiples of
/// 1/resolution. Dimensions and rewards are taken from the reference model.
/// Throws if the grid would exceed max_candidates.
inline CandidatePool make_grid_pool(const PomdpModel& reference, int resolution,
                                    long max_candidates = 100000,
                                    long plan_budget = kDefaultPlanBudget) {
  const int S = reference.num_states, A = reference.num_actions, O = reference.num_observations,
            H = reference.horizon;
  const auto state_cols = pool_detail::simplex_grid(S, resolution);
  const auto obs_cols = pool_detail::simplex_grid(O, resolution);
  const long num_state_cols = 1 + static_cast<long>(H - 1) * A * S;  // mu1 + transition columns
  const long num_obs_cols = static_cast<long>(H) * S;                // emission columns

  double log_total = num_state_cols * std::log(static_cast<double>(state_cols.size())) +
                     num_obs_cols * std::log(static_cast<double>(obs_cols.size()));
  if (log_total > std::log(static_cast<double>(max_candidates)))
    throw std::invalid_argument("make_grid_pool: grid size exceeds max_candidates");

  CandidatePool pool;
  std::vector<int> odo(num_state_cols + num_obs_cols, 0);
  long index = 0;
  for (;;) {
    PomdpModel m = reference;
    int slot = 0;
    m.initial_distribution = state_cols[odo[slot++]];
    for (int h = 0; h < H - 1; ++h)
      for (int a = 0; a < A; ++a)
        for (int s = 0; s < S; ++s) m.transitions[h][a].col(s) = state_cols[odo[slot++]];
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s) m.emissions[h].col(s) = obs_cols[odo[slot++]];
    pool.add("grid-" + std::to_string(index++), std::move(m), plan_budget);

    // advance the odometer
    int pos = static_cast<int>(odo.size()) - 1;
    while (pos >= 0) {
      const long limit = pos < num_state_cols ? static_cast<long>(state_cols.size())
                                              : static_cast<long>(obs_cols.size());
      if (++odo[pos] < limit) break;
      odo[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return pool;
}

/// Perturbation pool around an estimate: candidate 0 is the base model, and
/// each further candidate redraws every stochastic column as
/// (1 - radius) * base + radius * Dirichlet(1).
inline CandidatePool make_perturb_pool(const PomdpModel& base, int num_perturbations,
                                       double radius, RngStream rng,
                                       long plan_budget = kDefaultPlanBudget) {
  if (radius < 0.0 || radius > 1.0)
    throw std::invalid_argument("make_perturb_pool: radius must be in [0,1]");
  CandidatePool pool;
  pool.add("perturb-base", base, plan_budget);
  for (int i = 1; i <= num_perturbations; ++i) {
    PomdpModel m = base;
    auto jitter = [&](Eigen::Ref<Eigen::VectorXd> col) {
      const int n = static_cast<int>(col.size());
      col = (1.0 - radius) * col + radius * rng.dirichlet(n, 1.0);
    };
    jitter(m.initial_distribution);
    for (auto& step : m.transitions)
      for (auto& T : step)
        for (int s = 0; s < m.num_states; ++s) jitter(T.col(s));
    for (auto& O : m.emissions)
      for (int s = 0; s < m.num_states; ++s) jitter(O.col(s));
    pool.add("perturb-" + std::to_string(i), std::move(m), plan_budget);
  }
  return pool;
}

}  // namespace pomdp

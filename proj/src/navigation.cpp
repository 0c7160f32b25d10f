#include "mdpnas/navigation.hpp"

#include <cmath>

#include "mdpnas/errors.hpp"
#include "mdpnas/planning.hpp"

namespace mdpnas {
namespace {

std::vector<double> uniform_transitions(std::size_t S, std::size_t A) {
  return std::vector<double>(S * A * S, 1.0 / static_cast<double>(S));
}

// Inverse-CDF draw from a probability row; the last index absorbs rounding.
std::size_t sample_index(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  // Skip trailing zero-probability entries.
  std::size_t last = probabilities.size() - 1;
  while (last > 0 && probabilities[last] == 0.0) --last;
  return last;
}

}  // namespace

double exploration_rate(std::uint64_t t, const ExplorationSchedule& schedule) {
  if (t == 0) throw DomainError("exploration_rate: t must be >= 1");
  const double x = static_cast<double>(t);
  const double m = static_cast<double>(schedule.m);
  switch (schedule.kind) {
    case ScheduleKind::ergodic:
      return 1.0 / std::sqrt(x);
    case ScheduleKind::communicating:
      if (schedule.m < 1) throw DomainError("exploration_rate: m must be >= 1");
      return std::pow(x, -1.0 / (m + 1.0));
    case ScheduleKind::theorem:
      if (schedule.m < 1) throw DomainError("exploration_rate: m must be >= 1");
      return std::pow(x, -1.0 / (2.0 * (m + 1.0)));
  }
  throw DomainError("exploration_rate: unknown schedule");
}

std::string_view to_string(NavigationMode mode) {
  return mode == NavigationMode::cesaro ? "c" : "d";
}

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::ergodic: return "ergodic";
    case ScheduleKind::communicating: return "comm";
    case ScheduleKind::theorem: return "theorem";
  }
  return "unknown";
}

NavigatorState::NavigatorState(std::size_t num_states, std::size_t num_actions, double gamma,
                               NavigatorOptions options)
    : num_states_(num_states),
      num_actions_(num_actions),
      options_(std::move(options)),
      current_state_(options_.initial_state),
      counts_(num_states * num_actions, 0),
      transition_counts_(num_states * num_actions * num_states, 0),
      reward_sums_(num_states * num_actions, 0.0),
      empirical_(num_states, num_actions, gamma, uniform_transitions(num_states, num_actions),
                 std::vector<double>(num_states * num_actions, 0.5)),
      oracle_policy_(StochasticPolicy::uniform(num_states, num_actions)),
      cesaro_(num_states * num_actions, 1.0 / static_cast<double>(num_actions)),
      row_scratch_(num_states) {
  if (options_.recompute_period == 0) throw ValidationError("recompute_period must be >= 1");
  if (current_state_ >= num_states) throw ValidationError("initial_state out of range");
}

StochasticPolicy NavigatorState::cesaro_policy() const {
  return StochasticPolicy(num_states_, num_actions_, cesaro_);
}

bool NavigatorState::refresh_oracle() {
  ++recomputes_;
  try {
    const ValueSolution solution = solve_optimal(empirical_, kDefaultSolveTolerance, empirical_policy_);
    empirical_policy_ = solution.optimal_policy;
    if (!solution.unique_optimum) {
      ++skipped_recomputes_;
      return false;
    }
    SolverOptions solver = options_.solver;
    if (oracle_allocation_) solver.warm_start = oracle_allocation_;
    const FeasibleProjector projector(empirical_);
    OracleAllocation result = solve_oracle_allocation(empirical_, solution, solver, projector);
    StochasticPolicy policy = mdpnas::oracle_policy(result.allocation.weights, num_states_, num_actions_);
    oracle_allocation_ = std::move(result.allocation);
    oracle_policy_ = std::move(policy);
    return true;
  } catch (const Error&) {
    ++skipped_recomputes_;
    return false;
  }
}

void NavigatorState::behavior_row(const ExplorationSchedule& schedule, std::size_t s,
                                  std::span<double> out) const {
  const double eps = t_ == 0 ? 1.0 : exploration_rate(t_, schedule);
  const double uniform = eps / static_cast<double>(num_actions_);
  const double* oracle = options_.mode == NavigationMode::cesaro
                             ? cesaro_.data() + s * num_actions_
                             : oracle_policy_.row(s).data();
  for (std::size_t a = 0; a < num_actions_; ++a) out[a] = uniform + (1.0 - eps) * oracle[a];
}

TransitionRecord NavigatorState::advance(const TabularMdp& truth, const ExplorationSchedule& schedule,
                                         Rng& rng) {
  if (truth.num_states() != num_states_ || truth.num_actions() != num_actions_) {
    throw ValidationError("advance: ground truth shape does not match the navigator");
  }
  const std::size_t S = num_states_;
  const std::size_t A = num_actions_;
  TransitionRecord record;
  record.state = current_state_;

  if (t_ == 0) {
    record.action = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * A), A - 1);
  } else {
    double row[64];
    std::vector<double> heap;
    std::span<double> policy_row;
    if (A <= 64) {
      policy_row = std::span<double>(row, A);
    } else {
      heap.resize(A);
      policy_row = heap;
    }
    behavior_row(schedule, current_state_, policy_row);
    record.action = sample_index(policy_row, uniform01(rng));
  }

  const std::size_t z = record.state * A + record.action;
  record.reward = uniform01(rng) < truth.reward(record.state, record.action) ? 1 : 0;
  record.next_state = sample_index(truth.row(record.state, record.action), uniform01(rng));

  ++counts_[z];
  ++transition_counts_[z * S + record.next_state];
  reward_sums_[z] += record.reward;

  const double n = static_cast<double>(counts_[z]);
  for (std::size_t next = 0; next < S; ++next) {
    row_scratch_[next] = static_cast<double>(transition_counts_[z * S + next]) / n;
  }
  empirical_.set_pair(record.state, record.action, row_scratch_, reward_sums_[z] / n);

  ++t_;
  if (t_ % options_.recompute_period == 0) refresh_oracle();
  if (options_.mode == NavigationMode::cesaro) {
    const double weight = 1.0 / static_cast<double>(t_);
    const std::vector<double>& oracle = oracle_policy_.probabilities();
    for (std::size_t i = 0; i < cesaro_.size(); ++i) cesaro_[i] += (oracle[i] - cesaro_[i]) * weight;
    // Rounding drift in the row sums is removed once per recompute period.
    if (t_ % options_.recompute_period == 0) {
      for (std::size_t s = 0; s < S; ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < A; ++a) total += cesaro_[s * A + a];
        for (std::size_t a = 0; a < A; ++a) cesaro_[s * A + a] /= total;
      }
    }
  }
  current_state_ = record.next_state;
  return record;
}

StochasticPolicy behavior_policy(const NavigatorState& state, const ExplorationSchedule& schedule) {
  const std::size_t S = state.num_states();
  const std::size_t A = state.num_actions();
  std::vector<double> probabilities(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    state.behavior_row(schedule, s, std::span<double>(probabilities.data() + s * A, A));
  }
  return StochasticPolicy(S, A, std::move(probabilities));
}

TabularMdp empirical_mdp(const NavigatorState& state) { return state.empirical(); }

}  // namespace mdpnas

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mdpnas/allocation.hpp"
#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

/// The library's single random engine. Per-run streams are seeded with
/// seed ^ run_index.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

enum class ScheduleKind {
  ergodic,        // eps_t = t^{-1/2}
  communicating,  // eps_t = t^{-1/(m+1)}
  theorem,        // eps_t = t^{-1/(2(m+1))}
};

struct ExplorationSchedule {
  ScheduleKind kind = ScheduleKind::ergodic;
  std::size_t m = 1;
};

double exploration_rate(std::uint64_t t, const ExplorationSchedule& schedule);

enum class NavigationMode {
  cesaro,  // C-Navigation: mix with the running mean of oracle policies
  direct,  // D-Navigation: mix with the latest oracle policy
};

std::string_view to_string(NavigationMode mode);
std::string_view to_string(ScheduleKind kind);

struct NavigatorOptions {
  NavigationMode mode = NavigationMode::direct;
  std::uint64_t recompute_period = 1000;
  std::size_t initial_state = 0;
  SolverOptions solver;
};

struct TransitionRecord {
  std::size_t state = 0;
  std::size_t action = 0;
  int reward = 0;
  std::size_t next_state = 0;
};

/// Online state of one navigating trajectory: visit counts, sufficient
/// statistics of the empirical model, and the oracle policies it follows.
class NavigatorState {
 public:
  NavigatorState(std::size_t num_states, std::size_t num_actions, double gamma,
                 NavigatorOptions options = {});

  std::uint64_t t() const noexcept { return t_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t current_state() const noexcept { return current_state_; }
  NavigationMode mode() const noexcept { return options_.mode; }
  std::uint64_t recompute_period() const noexcept { return options_.recompute_period; }

  /// N(s,a), indexed s * A + a.
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  /// N(s,a,s'), indexed (s * A + a) * S + s'.
  const std::vector<std::uint64_t>& transition_counts() const noexcept { return transition_counts_; }
  const std::vector<double>& reward_sums() const noexcept { return reward_sums_; }

  /// Empirical model, kept in sync with the counts after every step.
  const TabularMdp& empirical() const noexcept { return empirical_; }

  const StochasticPolicy& oracle_policy() const noexcept { return oracle_policy_; }
  /// Running mean of the oracle policies in effect at steps 1..t (C mode only).
  StochasticPolicy cesaro_policy() const;
  const std::vector<double>& cesaro_weights() const noexcept { return cesaro_; }
  const std::optional<Allocation>& oracle_allocation() const noexcept { return oracle_allocation_; }

  std::size_t recomputes() const noexcept { return recomputes_; }
  std::size_t skipped_recomputes() const noexcept { return skipped_recomputes_; }

  /// Re-solves the empirical optimum, oracle allocation and oracle policy.
  /// Ties or solver failures keep the previous oracle policy; returns whether
  /// the oracle was updated.
  bool refresh_oracle();

  /// Fills `out` (length A) with the behaviour policy at state `s`.
  void behavior_row(const ExplorationSchedule& schedule, std::size_t s, std::span<double> out) const;

  TransitionRecord advance(const TabularMdp& truth, const ExplorationSchedule& schedule, Rng& rng);

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  NavigatorOptions options_;
  std::uint64_t t_ = 0;
  std::size_t current_state_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> transition_counts_;
  std::vector<double> reward_sums_;
  TabularMdp empirical_;
  StochasticPolicy oracle_policy_;
  std::vector<double> cesaro_;
  std::optional<Allocation> oracle_allocation_;
  std::vector<std::size_t> empirical_policy_;
  std::size_t recomputes_ = 0;
  std::size_t skipped_recomputes_ = 0;
  std::vector<double> row_scratch_;
};

/// pi_t = eps_t pi_u + (1 - eps_t) pi_o, with pi_o the latest oracle policy
/// (D mode) or the Cesaro mean of oracle policies (C mode).
StochasticPolicy behavior_policy(const NavigatorState& state, const ExplorationSchedule& schedule);

/// Samples a ~ pi_t(.|s_t) (uniform at t = 0), R ~ Bernoulli(r(s,a)) and
/// s' ~ p(.|s,a) from the ground truth, then updates every statistic.
inline TransitionRecord advance(const TabularMdp& truth, NavigatorState& state,
                                const ExplorationSchedule& schedule, Rng& rng) {
  return state.advance(truth, schedule, rng);
}

/// p_hat = N(s,a,.)/N(s,a), r_hat = R_sum/N(s,a); uniform rows and reward 0.5
/// for unvisited pairs.
TabularMdp empirical_mdp(const NavigatorState& state);

}  // namespace mdpnas

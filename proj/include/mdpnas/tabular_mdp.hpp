#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mdpnas {

/// Tolerance on transition-row and policy-row sums.
inline constexpr double kRowSumTolerance = 1e-12;

/// Finite discounted MDP with Bernoulli rewards.
///
/// Transitions are stored row-major as p[(s * A + a) * S + s'] and reward
/// means as r[s * A + a]. The constructor validates every invariant, so a
/// live instance is always well formed.
class TabularMdp {
 public:
  static constexpr std::string_view kRewardFamily = "bernoulli";

  TabularMdp(std::size_t num_states, std::size_t num_actions, double gamma,
             std::vector<double> transitions, std::vector<double> reward_means);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_pairs() const noexcept { return num_states_ * num_actions_; }
  double gamma() const noexcept { return gamma_; }

  std::size_t pair(std::size_t s, std::size_t a) const noexcept {
    return s * num_actions_ + a;
  }

  double transition(std::size_t s, std::size_t a, std::size_t next) const noexcept {
    return transitions_[pair(s, a) * num_states_ + next];
  }
  std::span<const double> row(std::size_t s, std::size_t a) const noexcept {
    return {transitions_.data() + pair(s, a) * num_states_, num_states_};
  }
  double reward(std::size_t s, std::size_t a) const noexcept {
    return reward_means_[pair(s, a)];
  }

  const std::vector<double>& transitions() const noexcept { return transitions_; }
  const std::vector<double>& reward_means() const noexcept { return reward_means_; }

  /// Replaces the transition row and reward mean of one pair, validating both.
  void set_pair(std::size_t s, std::size_t a, std::span<const double> row,
                double reward_mean);

  bool operator==(const TabularMdp&) const = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double gamma_;
  std::vector<double> transitions_;
  std::vector<double> reward_means_;
};

/// Stationary randomized policy pi(a|s), stored row-major as pi[s * A + a].
class StochasticPolicy {
 public:
  StochasticPolicy(std::size_t num_states, std::size_t num_actions,
                   std::vector<double> probabilities);

  static StochasticPolicy uniform(std::size_t num_states, std::size_t num_actions);
  static StochasticPolicy deterministic(std::size_t num_actions,
                                        std::span<const std::size_t> actions);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  double operator()(std::size_t s, std::size_t a) const noexcept {
    return probabilities_[s * num_actions_ + a];
  }
  std::span<const double> row(std::size_t s) const noexcept {
    return {probabilities_.data() + s * num_actions_, num_actions_};
  }
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }

  /// Smallest entry over all (s, a).
  double min_probability() const noexcept;

  bool operator==(const StochasticPolicy&) const = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> probabilities_;
};

/// Throws ValidationError if `policy` does not match the shape of `mdp`.
void require_same_shape(const TabularMdp& mdp, const StochasticPolicy& policy);

}  // namespace mdpnas

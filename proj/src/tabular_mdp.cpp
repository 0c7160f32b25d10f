#include "mdpnas/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

std::string pair_name(std::size_t s, std::size_t a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

void check_transition_row(std::span<const double> row, std::size_t s, std::size_t a) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("transition row " + pair_name(s, a) + ": negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw ValidationError("transition row " + pair_name(s, a) + ": row sums to " + std::to_string(sum) +
                          ", expected 1");
  }
}

void check_policy_row(std::span<const double> row, std::size_t s) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("policy row s=" + std::to_string(s) + ": negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw ValidationError("policy row s=" + std::to_string(s) + ": row sums to " + std::to_string(sum) +
                          ", expected 1");
  }
}

void check_reward(double r, std::size_t s, std::size_t a) {
  if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
    throw ValidationError("reward mean at " + pair_name(s, a) + " outside [0, 1]");
  }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions, double gamma,
                       std::vector<double> transitions, std::vector<double> reward_means)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      transitions_(std::move(transitions)),
      reward_means_(std::move(reward_means)) {
  if (num_states_ == 0 || num_actions_ == 0) {
    throw ValidationError("MDP needs at least one state and one action");
  }
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
    throw ValidationError("discount gamma must lie in [0, 1), got " + std::to_string(gamma_));
  }
  if (transitions_.size() != num_pairs() * num_states_) {
    throw ValidationError("transitions: expected " + std::to_string(num_pairs() * num_states_) +
                          " entries, got " + std::to_string(transitions_.size()));
  }
  if (reward_means_.size() != num_pairs()) {
    throw ValidationError("reward_means: expected " + std::to_string(num_pairs()) +
                          " entries, got " + std::to_string(reward_means_.size()));
  }
  for (std::size_t s = 0; s < num_states_; ++s) {
    for (std::size_t a = 0; a < num_actions_; ++a) {
      check_transition_row(row(s, a), s, a);
      check_reward(reward(s, a), s, a);
    }
  }
}

void TabularMdp::set_pair(std::size_t s, std::size_t a, std::span<const double> new_row,
                          double reward_mean) {
  if (s >= num_states_ || a >= num_actions_ || new_row.size() != num_states_) {
    throw ValidationError("set_pair: index or row length out of range");
  }
  check_transition_row(new_row, s, a);
  check_reward(reward_mean, s, a);
  std::copy(new_row.begin(), new_row.end(), transitions_.begin() + pair(s, a) * num_states_);
  reward_means_[pair(s, a)] = reward_mean;
}

StochasticPolicy::StochasticPolicy(std::size_t num_states, std::size_t num_actions,
                                   std::vector<double> probabilities)
    : num_states_(num_states), num_actions_(num_actions), probabilities_(std::move(probabilities)) {
  if (num_states_ == 0 || num_actions_ == 0 ||
      probabilities_.size() != num_states_ * num_actions_) {
    throw ValidationError("policy: shape mismatch");
  }
  for (std::size_t s = 0; s < num_states_; ++s) {
    check_policy_row(row(s), s);
  }
}

StochasticPolicy StochasticPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  return StochasticPolicy(num_states, num_actions,
                          std::vector<double>(num_states * num_actions,
                                              1.0 / static_cast<double>(num_actions)));
}

StochasticPolicy StochasticPolicy::deterministic(std::size_t num_actions,
                                                 std::span<const std::size_t> actions) {
  std::vector<double> probs(actions.size() * num_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= num_actions) {
      throw ValidationError("deterministic policy: action out of range at s=" + std::to_string(s));
    }
    probs[s * num_actions + actions[s]] = 1.0;
  }
  return StochasticPolicy(actions.size(), num_actions, std::move(probs));
}

double StochasticPolicy::min_probability() const noexcept {
  return *std::min_element(probabilities_.begin(), probabilities_.end());
}

void require_same_shape(const TabularMdp& mdp, const StochasticPolicy& policy) {
  if (mdp.num_states() != policy.num_states() || mdp.num_actions() != policy.num_actions()) {
    throw ValidationError("policy shape does not match the MDP");
  }
}

}  // namespace mdpnas

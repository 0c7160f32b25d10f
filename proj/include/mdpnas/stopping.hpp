#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mdpnas/allocation.hpp"
#include "mdpnas/planning.hpp"
#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

/// Bernoulli KL divergence kl(p, q) in nats, with 0 log 0 = 0.
/// Returns +infinity when q is 0 or 1 and p differs from it.
double kl_bernoulli(double p, double q);

/// KL(p || q) between categorical distributions; +infinity if p is not
/// absolutely continuous w.r.t. q.
double kl_categorical(std::span<const double> p, std::span<const double> q);

/// Inverse of h(x) = x - log x on [1, inf). Throws DomainError for y < 1.
double h_inverse(double y);

/// Calibration function of the reward deviation threshold; varphi(x) ~ x + log x.
double varphi(double x);

struct ThresholdConfig {
  double delta = 0.1;
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
};

/// log(1/delta) + (S-1) sum_{s,a} log(e (1 + N(s,a)/(S-1))).
double beta_transitions(std::span<const std::uint64_t> counts, const ThresholdConfig& config);

/// SA varphi(log(1/delta)/SA) + 3 sum_{s,a: N >= 1} log(1 + log N(s,a)).
double beta_rewards(std::span<const std::uint64_t> counts, const ThresholdConfig& config);

struct StoppingDecision {
  bool stop = false;
  double statistic = 0.0;
  double threshold = 0.0;
  /// False when the empirical model has tied optimal actions (test skipped).
  bool unique_optimum = false;
  /// Optimal policy of the empirical model.
  std::vector<std::size_t> empirical_policy;
};

/// GLR-proxy test: statistic = t / U(M_hat, N/t) against
/// beta_r(t, delta/2) + beta_p(t, delta/2).
///
/// `warm_start` seeds policy iteration on the empirical model.
StoppingDecision stopping_decision(const TabularMdp& empirical,
                                   std::span<const std::uint64_t> counts, std::uint64_t t,
                                   const ThresholdConfig& config,
                                   const std::vector<std::size_t>& warm_start = {});

/// Stateful form of stopping_decision for one trajectory. Caches the
/// per-pair threshold terms of the pairs whose counts did not change since
/// the previous call and the last empirical policy (warm start); decisions
/// are identical to stopping_decision's.
class StoppingRule {
 public:
  explicit StoppingRule(const ThresholdConfig& config, std::vector<std::size_t> warm_start = {});

  /// beta_r(t, delta/2) + beta_p(t, delta/2).
  double threshold(std::span<const std::uint64_t> counts);
  StoppingDecision decide(const TabularMdp& empirical, std::span<const std::uint64_t> counts,
                          std::uint64_t t);

  const ThresholdConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& warm_start() const noexcept { return warm_start_; }

 private:
  ThresholdConfig config_;
  double constant_ = 0.0;  // log(2/delta) + SA varphi(log(2/delta)/SA)
  std::vector<std::uint64_t> seen_;
  std::vector<double> transition_terms_;
  std::vector<double> reward_terms_;
  std::vector<std::size_t> warm_start_;
  std::vector<double> frequencies_;
  ValueSolution solution_;
  HardnessProfile profile_;
};

}  // namespace mdpnas

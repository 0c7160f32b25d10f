#include "mdpnas/stopping.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mdpnas/allocation.hpp"
#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_{n >= 1} 1/n^2
constexpr double kBaselSum = std::numbers::pi * std::numbers::pi / 6.0;

double h(double x) { return x - std::log(x); }

double h_tilde(double x) {
  static const double kBranch = h_inverse(1.0 / std::log(1.5));
  if (x >= kBranch) {
    const double inv = h_inverse(x);
    return inv * std::exp(1.0 / inv);
  }
  return 1.5 * (x - std::log(std::log(1.5)));
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

}  // namespace

double kl_bernoulli(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0)) {
    throw DomainError("kl_bernoulli: arguments must lie in [0, 1]");
  }
  if (q == 0.0 || q == 1.0) return p == q ? 0.0 : kInf;
  double out = 0.0;
  if (p > 0.0) out += p * std::log(p / q);
  if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return std::max(out, 0.0);
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("kl_categorical: size mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    out += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(out, 0.0);
}

double h_inverse(double y) {
  if (!(y >= 1.0)) throw DomainError("h_inverse: argument must be >= 1");
  if (y == 1.0) return 1.0;
  double lo = 1.0;
  double hi = y + std::log(y) + 1.0;
  double x = y + std::log(y);
  for (int it = 0; it < 200; ++it) {
    const double f = h(x) - y;
    if (f > 0.0) hi = x; else lo = x;
    if (hi - lo <= 1e-13) break;
    // Newton step, replaced by bisection when it leaves the bracket.
    const double slope = 1.0 - 1.0 / x;
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double varphi(double x) {
  if (!(x >= 0.0)) throw DomainError("varphi: argument must be >= 0");
  const double y = 0.5 * (h_inverse(1.0 + x) + std::log(2.0 * kBaselSum));
  return 2.0 * h_tilde(y);
}

double beta_transitions(std::span<const std::uint64_t> counts, const ThresholdConfig& config) {
  check_delta(config.delta);
  double out = std::log(1.0 / config.delta);
  if (config.num_states < 2) return out;
  const double dof = static_cast<double>(config.num_states - 1);
  double sum = 0.0;
  for (std::uint64_t n : counts) sum += 1.0 + std::log1p(static_cast<double>(n) / dof);
  return out + dof * sum;
}

double beta_rewards(std::span<const std::uint64_t> counts, const ThresholdConfig& config) {
  check_delta(config.delta);
  const double pairs = static_cast<double>(config.num_states * config.num_actions);
  // varphi needs a root solve; runs evaluate it with the same arguments at every step.
  thread_local double cached_delta = -1.0;
  thread_local double cached_pairs = -1.0;
  thread_local double cached_term = 0.0;
  if (config.delta != cached_delta || pairs != cached_pairs) {
    cached_term = pairs * varphi(std::log(1.0 / config.delta) / pairs);
    cached_delta = config.delta;
    cached_pairs = pairs;
  }
  double out = cached_term;
  double sum = 0.0;
  for (std::uint64_t n : counts) {
    if (n >= 2) sum += std::log1p(std::log(static_cast<double>(n)));
  }
  return out + 3.0 * sum;
}

StoppingDecision stopping_decision(const TabularMdp& empirical,
                                   std::span<const std::uint64_t> counts, std::uint64_t t,
                                   const ThresholdConfig& config,
                                   const std::vector<std::size_t>& warm_start) {
  StoppingRule rule(config, warm_start);
  return rule.decide(empirical, counts, t);
}

StoppingRule::StoppingRule(const ThresholdConfig& config, std::vector<std::size_t> warm_start)
    : config_(config), warm_start_(std::move(warm_start)) {
  check_delta(config.delta);
  const std::size_t pairs = config.num_states * config.num_actions;
  ThresholdConfig half = config;
  half.delta = 0.5 * config.delta;
  const std::vector<std::uint64_t> zeros(pairs, 0);
  // With all counts zero: beta_r is its constant and beta_p is log(1/delta') + dof * pairs.
  constant_ = beta_rewards(zeros, half);
  seen_.assign(pairs, 0);
  const double dof = config.num_states < 2 ? 0.0 : static_cast<double>(config.num_states - 1);
  transition_terms_.assign(pairs, config.num_states < 2 ? 0.0 : 1.0 + std::log1p(0.0 / dof));
  reward_terms_.assign(pairs, 0.0);
  frequencies_.resize(pairs);
}

double StoppingRule::threshold(std::span<const std::uint64_t> counts) {
  if (counts.size() != seen_.size()) throw ValidationError("StoppingRule: counts length");
  const double half_delta = 0.5 * config_.delta;
  const double dof = static_cast<double>(config_.num_states) - 1.0;
  for (std::size_t z = 0; z < counts.size(); ++z) {
    const std::uint64_t n = counts[z];
    if (n == seen_[z]) continue;
    seen_[z] = n;
    if (config_.num_states >= 2) transition_terms_[z] = 1.0 + std::log1p(static_cast<double>(n) / dof);
    reward_terms_[z] = n >= 2 ? std::log1p(std::log(static_cast<double>(n))) : 0.0;
  }
  // Same summation order as beta_rewards and beta_transitions.
  double reward_sum = 0.0;
  for (double term : reward_terms_) reward_sum += term;
  const double beta_r = constant_ + 3.0 * reward_sum;
  double beta_p = std::log(1.0 / half_delta);
  if (config_.num_states >= 2) {
    double sum = 0.0;
    for (double term : transition_terms_) sum += term;
    beta_p += dof * sum;
  }
  return beta_r + beta_p;
}

StoppingDecision StoppingRule::decide(const TabularMdp& empirical, std::span<const std::uint64_t> counts,
                                      std::uint64_t t) {
  if (t == 0) throw DomainError("stopping_decision: t must be >= 1");
  if (counts.size() != empirical.num_pairs()) throw ValidationError("stopping_decision: counts length");

  StoppingDecision out;
  solve_optimal(empirical, kDefaultSolveTolerance, warm_start_, solution_);
  warm_start_ = solution_.optimal_policy;
  out.empirical_policy = solution_.optimal_policy;
  out.unique_optimum = solution_.unique_optimum;
  out.threshold = threshold(counts);
  if (!solution_.unique_optimum) return out;

  hardness_profile(solution_, empirical.gamma(), profile_);
  const double total = static_cast<double>(t);
  for (std::size_t z = 0; z < counts.size(); ++z) frequencies_[z] = static_cast<double>(counts[z]) / total;
  const double u = upper_bound_U(profile_, frequencies_);
  out.statistic = std::isfinite(u) ? total / u : 0.0;
  out.stop = out.statistic >= out.threshold;
  return out;
}

}  // namespace mdpnas

#pragma once

#include <cstddef>
#include <vector>

#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

inline constexpr double kDefaultSolveTolerance = 1e-10;
/// Two actions whose optimal Q-values differ by at most this much are tied.
inline constexpr double kTieTolerance = 1e-9;

/// Optimal values, the smallest-index optimal policy, and the gap/variance
/// quantities derived from V*. All per-pair vectors are indexed s * A + a.
struct ValueSolution {
  std::vector<double> optimal_value;
  std::vector<double> optimal_q;
  std::vector<std::size_t> optimal_policy;
  std::vector<double> gaps;
  /// Minimum gap over pairs (s, a) with a != pi*(s); +infinity when A == 1.
  double min_gap = 0.0;
  double span = 0.0;
  /// Var_{s' ~ p(.|s,a)}[V*(s')] per pair.
  std::vector<double> value_variance;
  bool unique_optimum = false;
  double solve_tolerance = kDefaultSolveTolerance;

  std::size_t num_states() const noexcept { return optimal_value.size(); }
  std::size_t num_actions() const noexcept {
    return optimal_value.empty() ? 0 : optimal_q.size() / optimal_value.size();
  }
};

/// Policy iteration with exact linear-system evaluation.
///
/// `warm_start`, when non-empty, seeds the policy; this makes repeated solves
/// of slowly-changing empirical models cheap (usually a single evaluation).
/// Throws ConvergenceError if the Bellman residual ends above `tol`.
ValueSolution solve_optimal(const TabularMdp& mdp, double tol = kDefaultSolveTolerance,
                            const std::vector<std::size_t>& warm_start = {});
/// Same, writing into `out` and reusing its storage.
void solve_optimal(const TabularMdp& mdp, double tol, const std::vector<std::size_t>& warm_start,
                   ValueSolution& out);

/// Value of a stochastic policy, from the linear system V = r_pi + gamma P_pi V.
std::vector<double> policy_value(const TabularMdp& mdp, const StochasticPolicy& policy,
                                 double tol = kDefaultSolveTolerance);

/// max_s |V(s) - max_a (r(s,a) + gamma sum_s' p(s'|s,a) V(s'))|.
double bellman_residual(const TabularMdp& mdp, const std::vector<double>& value);

}  // namespace mdpnas

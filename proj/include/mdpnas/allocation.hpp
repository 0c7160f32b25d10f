#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mdpnas/planning.hpp"
#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

/// Per-pair hardness H(s,a) of the sub-optimal pairs and the aggregate H*.
///
///   H(s,a) = 2/D^2 + max(16 Var_{p(s,a)}[V*]/D^2, 6 sp(V*)^{4/3}/D^{4/3}),  D = gap(s,a)
///   T3 = 2 / (Dmin^2 (1-g)^2)
///   T4 = min(27/(Dmin^2 (1-g)^3), max(16 Var*_max/(Dmin^2 (1-g)^2),
///                                     6 sp^{4/3}/(Dmin^{4/3} (1-g)^{4/3})))
///   H* = S (T3 + T4)
///
/// where Var*_max is the largest next-state variance of V* along pi*.
struct HardnessProfile {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  /// H(s,a) for sub-optimal pairs; 0 on the optimal pairs (s, pi*(s)).
  std::vector<double> hardness;
  std::vector<std::size_t> optimal_policy;
  double h_star = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;

  bool is_optimal_pair(std::size_t s, std::size_t a) const noexcept {
    return optimal_policy[s] == a;
  }
};

/// Throws UniquenessError when the solution has tied optimal actions.
HardnessProfile hardness_profile(const ValueSolution& solution, double gamma);
/// Same, writing into `out` and reusing its storage.
void hardness_profile(const ValueSolution& solution, double gamma, HardnessProfile& out);

/// A state-action weight vector, indexed s * A + a.
struct Allocation {
  std::vector<double> weights;
  /// Largest per-state violation of the flow-balance constraints.
  double feasibility_residual = 0.0;
  std::optional<double> objective;
};

struct SolverOptions {
  std::size_t max_iters = 20'000;
  /// Step length scale c in c/sqrt(k); non-positive selects min_z omega_init(z).
  double step_scale = 0.0;
  double projection_tol = 1e-10;
  std::size_t projection_max_sweeps = 10'000;
  /// Stop once the best value improved by less than this relative amount ...
  double stall_tolerance = 1e-8;
  /// ... over this many consecutive iterations.
  std::size_t stall_window = 1000;
  std::optional<Allocation> warm_start;
};

/// residual(s) = | sum_a w(s,a) - sum_{s',a'} p(s|s',a') w(s',a') |.
std::vector<double> navigation_residual(const TabularMdp& mdp, std::span<const double> omega);
double max_navigation_residual(const TabularMdp& mdp, std::span<const double> omega);

/// Euclidean projection onto the navigation polytope
/// { w >= 0, sum w = 1, flow balance } by Dykstra's alternating projections
/// between the simplex and the affine flow subspace.
///
/// The affine projector is factored once per MDP, so one instance can serve
/// many projections.
class FeasibleProjector {
 public:
  explicit FeasibleProjector(const TabularMdp& mdp);

  /// Throws ConvergenceError when `max_sweeps` is exhausted.
  Allocation project(std::span<const double> x, double tol, std::size_t max_sweeps) const;

  void project_affine(Eigen::VectorXd& x) const;

  /// Largest per-state flow-balance violation of `x`.
  double residual(const Eigen::VectorXd& x) const;

  std::size_t last_sweeps() const noexcept { return last_sweeps_; }

 private:
  Eigen::MatrixXd flow_;    // S x SA flow-balance operator
  Eigen::MatrixXd basis_;   // orthonormal basis of the constraint row space
  Eigen::VectorXd offset_;  // minimum-norm point of the affine subspace
  mutable std::size_t last_sweeps_ = 0;
};

Allocation project_feasible(const TabularMdp& mdp, std::span<const double> x,
                            const SolverOptions& options = {});

/// Exact Euclidean projection of `x` onto the probability simplex.
void project_simplex(Eigen::VectorXd& x);

/// U(omega) = max_{a != pi*(s)} H(s,a)/w(s,a) + H*/(S min_s w(s, pi*(s))).
/// Returns +infinity when any entry it divides by is zero.
double upper_bound_U(const HardnessProfile& profile, std::span<const double> omega);

struct OracleAllocation {
  Allocation allocation;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Projected subgradient descent on U over the navigation polytope.
///
/// Starts from the warm start, or else from the stationary distribution of
/// the uniform-policy chain, and returns the best iterate seen. The result is
/// never worse than the starting point.
OracleAllocation solve_oracle_allocation(const TabularMdp& mdp, const ValueSolution& solution,
                                         const SolverOptions& options = {});

/// Same, reusing a projector already built for `mdp`.
OracleAllocation solve_oracle_allocation(const TabularMdp& mdp, const ValueSolution& solution,
                                         const SolverOptions& options,
                                         const FeasibleProjector& projector);

/// pi(a|s) = w(s,a) / sum_b w(s,b). Throws DomainError on a state with zero mass.
StochasticPolicy oracle_policy(std::span<const double> omega, std::size_t num_states,
                               std::size_t num_actions);

}  // namespace mdpnas

#include "mdpnas/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdpnas/chain.hpp"
#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

constexpr double kWeightFloor = 1e-12;
constexpr double kActiveTolerance = 1e-12;

Eigen::VectorXd to_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

bool on_simplex(std::span<const double> w) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

}  // namespace

HardnessProfile hardness_profile(const ValueSolution& solution, double gamma) {
  HardnessProfile out;
  hardness_profile(solution, gamma, out);
  return out;
}

void hardness_profile(const ValueSolution& solution, double gamma, HardnessProfile& out) {
  if (!solution.unique_optimum) {
    throw UniquenessError("hardness_profile: the optimal policy is not unique");
  }
  const std::size_t S = solution.num_states();
  const std::size_t A = solution.num_actions();
  out.h_star = 0.0;
  out.t3 = 0.0;
  out.t4 = 0.0;
  out.num_states = S;
  out.num_actions = A;
  out.optimal_policy = solution.optimal_policy;
  out.hardness.assign(S * A, 0.0);

  const double span43 = solution.span * std::cbrt(solution.span);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      if (a == solution.optimal_policy[s]) continue;
      const double gap = solution.gaps[s * A + a];
      const double gap2 = gap * gap;
      out.hardness[s * A + a] =
          2.0 / gap2 + std::max(16.0 * solution.value_variance[s * A + a] / gap2,
                                6.0 * span43 / (gap * std::cbrt(gap)));
    }
  }

  if (A == 1) return;  // no sub-optimal pairs; H* and the T terms stay 0

  double var_max = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    var_max = std::max(var_max, solution.value_variance[s * A + solution.optimal_policy[s]]);
  }
  const double dmin = solution.min_gap;
  const double dmin2 = dmin * dmin;
  const double horizon = 1.0 - gamma;
  out.t3 = 2.0 / (dmin2 * horizon * horizon);
  out.t4 = std::min(27.0 / (dmin2 * horizon * horizon * horizon),
                    std::max(16.0 * var_max / (dmin2 * horizon * horizon),
                             6.0 * span43 / (dmin * horizon * std::cbrt(dmin * horizon))));
  out.h_star = static_cast<double>(S) * (out.t3 + out.t4);
}

std::vector<double> navigation_residual(const TabularMdp& mdp, std::span<const double> omega) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  if (omega.size() != S * A) throw ValidationError("navigation_residual: omega has the wrong length");
  std::vector<double> balance(S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double w = omega[s * A + a];
      balance[s] += w;
      const auto row = mdp.row(s, a);
      for (std::size_t next = 0; next < S; ++next) balance[next] -= row[next] * w;
    }
  }
  for (double& b : balance) b = std::abs(b);
  return balance;
}

double max_navigation_residual(const TabularMdp& mdp, std::span<const double> omega) {
  const auto r = navigation_residual(mdp, omega);
  return *std::max_element(r.begin(), r.end());
}

void project_simplex(Eigen::VectorXd& x) {
  const auto n = x.size();
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) threshold = candidate;
  }
  x = (x.array() - threshold).cwiseMax(0.0).matrix();
}

FeasibleProjector::FeasibleProjector(const TabularMdp& mdp) {
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  const Eigen::Index n = S * A;
  flow_ = Eigen::MatrixXd::Zero(S, n);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      const Eigen::Index z = s * A + a;
      flow_(s, z) += 1.0;
      const auto row = mdp.row(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
      for (Eigen::Index next = 0; next < S; ++next) flow_(next, z) -= row[static_cast<std::size_t>(next)];
    }
  }
  Eigen::MatrixXd constraints(S + 1, n);
  constraints.topRows(S) = flow_;
  constraints.row(S).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 1);
  rhs(S) = 1.0;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& singular = svd.singularValues();
  const double cutoff = 1e-12 * std::max<double>(1.0, singular(0)) * static_cast<double>(n);
  Eigen::Index rank = 0;
  while (rank < singular.size() && singular(rank) > cutoff) ++rank;
  basis_ = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd coeffs =
      (svd.matrixU().leftCols(rank).transpose() * rhs).cwiseQuotient(singular.head(rank));
  offset_ = basis_ * coeffs;
}

void FeasibleProjector::project_affine(Eigen::VectorXd& x) const {
  x -= basis_ * (basis_.transpose() * (x - offset_));
}

double FeasibleProjector::residual(const Eigen::VectorXd& x) const {
  return (flow_ * x).cwiseAbs().maxCoeff();
}

Allocation FeasibleProjector::project(std::span<const double> input, double tol,
                                      std::size_t max_sweeps) const {
  if (static_cast<Eigen::Index>(input.size()) != flow_.cols()) {
    throw ValidationError("project_feasible: input has the wrong length");
  }
  Eigen::VectorXd x = to_vector(input);
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd y(x.size());
  double change = std::numeric_limits<double>::infinity();
  double feasibility = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    // The affine set needs no Dykstra correction: it would lie in the normal space.
    y = x;
    project_affine(y);
    y += correction;
    Eigen::VectorXd next = y;
    project_simplex(next);
    correction = y - next;
    change = (next - x).lpNorm<Eigen::Infinity>();
    x.swap(next);
    feasibility = residual(x);
    if (change < tol && feasibility <= tol) {
      last_sweeps_ = sweep;
      return Allocation{to_std(x), feasibility, std::nullopt};
    }
  }
  last_sweeps_ = max_sweeps;
  throw ConvergenceError("projection onto the navigation polytope did not converge",
                         std::max(change, feasibility));
}

Allocation project_feasible(const TabularMdp& mdp, std::span<const double> x,
                            const SolverOptions& options) {
  return FeasibleProjector(mdp).project(x, options.projection_tol, options.projection_max_sweeps);
}

double upper_bound_U(const HardnessProfile& profile, std::span<const double> omega) {
  const std::size_t S = profile.num_states;
  const std::size_t A = profile.num_actions;
  if (omega.size() != S * A) throw ValidationError("upper_bound_U: omega has the wrong length");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  double worst = 0.0;
  double min_optimal = kInf;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double w = omega[s * A + a];
      if (a == profile.optimal_policy[s]) {
        min_optimal = std::min(min_optimal, w);
      } else {
        if (!(w > 0.0)) return kInf;
        worst = std::max(worst, profile.hardness[s * A + a] / w);
      }
    }
  }
  if (!(min_optimal > 0.0)) return kInf;
  return worst + profile.h_star / (static_cast<double>(S) * min_optimal);
}

OracleAllocation solve_oracle_allocation(const TabularMdp& mdp, const ValueSolution& solution,
                                         const SolverOptions& options) {
  return solve_oracle_allocation(mdp, solution, options, FeasibleProjector(mdp));
}

OracleAllocation solve_oracle_allocation(const TabularMdp& mdp, const ValueSolution& solution,
                                         const SolverOptions& options,
                                         const FeasibleProjector& projector) {
  const HardnessProfile profile = hardness_profile(solution, mdp.gamma());
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t n = S * A;
  const double feasible_tol = 10.0 * options.projection_tol;

  Eigen::VectorXd current;
  if (options.warm_start && options.warm_start->weights.size() == n &&
      on_simplex(options.warm_start->weights) &&
      max_navigation_residual(mdp, options.warm_start->weights) <= feasible_tol) {
    current = to_vector(options.warm_start->weights);
  } else if (options.warm_start && options.warm_start->weights.size() == n) {
    current = to_vector(projector
                            .project(options.warm_start->weights, options.projection_tol,
                                     options.projection_max_sweeps)
                            .weights);
  } else {
    try {
      const auto chain = state_action_kernel(mdp, StochasticPolicy::uniform(S, A));
      current = stationary_distribution(chain);
    } catch (const ConvergenceError&) {
      current = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
    }
    if (projector.residual(current) > options.projection_tol) {
      current = to_vector(
          projector.project(to_std(current), options.projection_tol, options.projection_max_sweeps)
              .weights);
    }
  }

  const auto value_of = [&](const Eigen::VectorXd& w) {
    return upper_bound_U(profile, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
  };

  Eigen::VectorXd best = current;
  double best_value = value_of(current);
  double step_scale = options.step_scale;
  if (!(step_scale > 0.0)) {
    step_scale = current.minCoeff();
    if (!(step_scale > 0.0)) step_scale = 1.0 / static_cast<double>(n);
  }

  double reference_value = best_value;
  std::size_t reference_iter = 0;
  std::size_t iter = 0;
  Eigen::VectorXd gradient(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> active;
  while (iter < options.max_iters && A > 1) {
    ++iter;
    const Eigen::VectorXd floored = current.cwiseMax(kWeightFloor);

    // Subgradient of the max term, averaged over its active pairs.
    gradient.setZero();
    double max_term = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        if (a == profile.optimal_policy[s]) continue;
        const auto z = static_cast<Eigen::Index>(s * A + a);
        max_term = std::max(max_term, profile.hardness[s * A + a] / floored(z));
      }
    }
    active.clear();
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        if (a == profile.optimal_policy[s]) continue;
        const auto z = static_cast<Eigen::Index>(s * A + a);
        if (profile.hardness[s * A + a] / floored(z) >= max_term * (1.0 - kActiveTolerance)) {
          active.push_back(s * A + a);
        }
      }
    }
    for (std::size_t z : active) {
      const auto zi = static_cast<Eigen::Index>(z);
      gradient(zi) -= profile.hardness[z] / (floored(zi) * floored(zi)) / static_cast<double>(active.size());
    }

    // Subgradient of the optimal-pair term at its minimising states.
    double min_optimal = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < S; ++s) {
      min_optimal = std::min(min_optimal, floored(static_cast<Eigen::Index>(s * A + profile.optimal_policy[s])));
    }
    active.clear();
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t z = s * A + profile.optimal_policy[s];
      if (floored(static_cast<Eigen::Index>(z)) <= min_optimal * (1.0 + kActiveTolerance)) active.push_back(z);
    }
    const double optimal_slope =
        profile.h_star / (static_cast<double>(S) * min_optimal * min_optimal);
    for (std::size_t z : active) {
      gradient(static_cast<Eigen::Index>(z)) -= optimal_slope / static_cast<double>(active.size());
    }

    const double norm = gradient.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    const Eigen::VectorXd trial =
        current - (step_scale / std::sqrt(static_cast<double>(iter))) * (gradient / norm);
    const Allocation projected = projector.project(
        std::span<const double>(trial.data(), n), options.projection_tol, options.projection_max_sweeps);
    current = to_vector(projected.weights);

    const double value = value_of(current);
    if (value < best_value) {
      best_value = value;
      best = current;
    }
    if (iter - reference_iter >= options.stall_window) {
      if (reference_value - best_value < options.stall_tolerance * best_value) break;
      reference_value = best_value;
      reference_iter = iter;
    }
  }

  OracleAllocation out;
  out.allocation.weights = to_std(best);
  out.allocation.feasibility_residual = projector.residual(best);
  out.allocation.objective = best_value;
  out.value = best_value;
  out.iterations = iter;
  return out;
}

StochasticPolicy oracle_policy(std::span<const double> omega, std::size_t num_states,
                               std::size_t num_actions) {
  if (omega.size() != num_states * num_actions) {
    throw ValidationError("oracle_policy: omega has the wrong length");
  }
  std::vector<double> probs(omega.begin(), omega.end());
  for (std::size_t s = 0; s < num_states; ++s) {
    double mass = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) mass += probs[s * num_actions + a];
    if (!(mass > 0.0)) {
      throw DomainError("oracle_policy: state " + std::to_string(s) + " has zero mass");
    }
    for (std::size_t a = 0; a < num_actions; ++a) probs[s * num_actions + a] /= mass;
  }
  return StochasticPolicy(num_states, num_actions, std::move(probs));
}

}  // namespace mdpnas

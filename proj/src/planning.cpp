#include "mdpnas/planning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

// Solves (I - gamma P) v = r, where P and r are assembled by the caller.
std::vector<double> solve_evaluation(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                                     double gamma) {
  const auto n = transition.rows();
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * transition;
  Eigen::VectorXd v = system.partialPivLu().solve(reward);
  return {v.data(), v.data() + n};
}

double q_value(const TabularMdp& mdp, std::size_t s, std::size_t a,
               const std::vector<double>& value) {
  double expected = 0.0;
  const auto row = mdp.row(s, a);
  for (std::size_t next = 0; next < row.size(); ++next) expected += row[next] * value[next];
  return mdp.reward(s, a) + mdp.gamma() * expected;
}

// Dense Gaussian elimination with partial pivoting on (I - gamma P_pi) v = r_pi.
// Hot path of every stopping check, so it works in a reusable thread-local buffer.
void deterministic_value(const TabularMdp& mdp, const std::vector<std::size_t>& policy,
                         std::vector<double>& value) {
  const std::size_t S = mdp.num_states();
  const double gamma = mdp.gamma();
  thread_local std::vector<double> system;
  system.assign(S * (S + 1), 0.0);
  const std::size_t width = S + 1;
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = mdp.row(s, policy[s]);
    double* out = system.data() + s * width;
    for (std::size_t next = 0; next < S; ++next) out[next] = -gamma * row[next];
    out[s] += 1.0;
    out[S] = mdp.reward(s, policy[s]);
  }
  for (std::size_t col = 0; col < S; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < S; ++r) {
      if (std::abs(system[r * width + col]) > std::abs(system[pivot * width + col])) pivot = r;
    }
    if (pivot != col) {
      for (std::size_t k = col; k < width; ++k) std::swap(system[col * width + k], system[pivot * width + k]);
    }
    const double diagonal = system[col * width + col];
    for (std::size_t r = col + 1; r < S; ++r) {
      const double factor = system[r * width + col] / diagonal;
      if (factor == 0.0) continue;
      for (std::size_t k = col; k < width; ++k) system[r * width + k] -= factor * system[col * width + k];
    }
  }
  value.resize(S);
  for (std::size_t r = S; r-- > 0;) {
    double acc = system[r * width + S];
    for (std::size_t k = r + 1; k < S; ++k) acc -= system[r * width + k] * value[k];
    value[r] = acc / system[r * width + r];
  }
}

}  // namespace

double bellman_residual(const TabularMdp& mdp, const std::vector<double>& value) {
  double residual = 0.0;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) best = std::max(best, q_value(mdp, s, a, value));
    residual = std::max(residual, std::abs(value[s] - best));
  }
  return residual;
}

ValueSolution solve_optimal(const TabularMdp& mdp, double tol,
                            const std::vector<std::size_t>& warm_start) {
  ValueSolution out;
  solve_optimal(mdp, tol, warm_start, out);
  return out;
}

void solve_optimal(const TabularMdp& mdp, double tol, const std::vector<std::size_t>& warm_start,
                   ValueSolution& out) {
  if (!(tol > 0.0)) throw DomainError("solve_optimal: tolerance must be positive");
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  thread_local std::vector<std::size_t> policy;
  thread_local std::vector<double> value;
  if (warm_start.size() == S &&
      std::all_of(warm_start.begin(), warm_start.end(), [A](std::size_t a) { return a < A; })) {
    policy = warm_start;
  } else {
    policy.assign(S, 0);
  }

  // Only switch actions on a strict improvement so that exact ties cannot cycle.
  constexpr double kImprovementSlack = 1e-13;
  const std::size_t max_rounds = 10 * S * A + 100;
  std::vector<double>& q = out.optimal_q;
  q.resize(S * A);
  bool stable = false;
  for (std::size_t round = 0; round < max_rounds && !stable; ++round) {
    deterministic_value(mdp, policy, value);
    stable = true;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) q[s * A + a] = q_value(mdp, s, a, value);
      const double current = q[s * A + policy[s]];
      const double scale = std::max(1.0, std::abs(current));
      std::size_t best = policy[s];
      for (std::size_t a = 0; a < A; ++a) {
        if (q[s * A + a] > q[s * A + best] + kImprovementSlack * scale) best = a;
      }
      if (best != policy[s]) {
        policy[s] = best;
        stable = false;
      }
    }
  }
  if (!stable) throw ConvergenceError("policy iteration did not stabilise", 0.0);

  out.solve_tolerance = tol;
  out.optimal_value.assign(S, 0.0);
  out.optimal_policy.assign(S, 0);
  out.gaps.assign(S * A, 0.0);
  out.value_variance.assign(S * A, 0.0);
  out.unique_optimum = true;
  out.min_gap = std::numeric_limits<double>::infinity();

  for (std::size_t s = 0; s < S; ++s) {
    double best = q[s * A];
    for (std::size_t a = 1; a < A; ++a) best = std::max(best, q[s * A + a]);
    out.optimal_value[s] = best;
    std::size_t chosen = 0;
    while (q[s * A + chosen] < best - kTieTolerance) ++chosen;
    out.optimal_policy[s] = chosen;
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double gap = out.optimal_value[s] - q[s * A + a];
      out.gaps[s * A + a] = gap;
      if (a != out.optimal_policy[s]) {
        out.min_gap = std::min(out.min_gap, gap);
        if (gap <= kTieTolerance) out.unique_optimum = false;
      }
    }
  }

  // Bellman residual of the evaluated value; q already holds its backup.
  double residual = 0.0;
  for (std::size_t s = 0; s < S; ++s) residual = std::max(residual, std::abs(value[s] - out.optimal_value[s]));
  if (residual > tol) throw ConvergenceError("policy iteration residual above tolerance", residual);

  const auto [lo, hi] = std::minmax_element(out.optimal_value.begin(), out.optimal_value.end());
  out.span = *hi - *lo;

  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = mdp.row(s, a);
      double first = 0.0;
      double second = 0.0;
      for (std::size_t next = 0; next < S; ++next) {
        const double v = out.optimal_value[next];
        first += row[next] * v;
        second += row[next] * v * v;
      }
      out.value_variance[s * A + a] = std::max(0.0, second - first * first);
    }
  }
}

std::vector<double> policy_value(const TabularMdp& mdp, const StochasticPolicy& policy,
                                 double tol) {
  require_same_shape(mdp, policy);
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const std::size_t A = mdp.num_actions();
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd reward = Eigen::VectorXd::Zero(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto su = static_cast<std::size_t>(s);
    for (std::size_t a = 0; a < A; ++a) {
      const double w = policy(su, a);
      if (w == 0.0) continue;
      reward(s) += w * mdp.reward(su, a);
      const auto row = mdp.row(su, a);
      for (Eigen::Index next = 0; next < S; ++next) transition(s, next) += w * row[static_cast<std::size_t>(next)];
    }
  }
  auto value = solve_evaluation(transition, reward, mdp.gamma());

  Eigen::Map<const Eigen::VectorXd> v(value.data(), S);
  const double residual = (v - reward - mdp.gamma() * transition * v).cwiseAbs().maxCoeff();
  if (residual > tol) throw ConvergenceError("policy evaluation residual above tolerance", residual);
  return value;
}

}  // namespace mdpnas

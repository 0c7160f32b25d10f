#include "mdpnas/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "mdpnas/errors.hpp"

namespace mdpnas {
namespace {

constexpr std::size_t kPowerIterationBudget = 1'000'000;

double stationarity_residual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& omega) {
  return (kernel.transpose() * omega - omega).lpNorm<1>();
}

Eigen::VectorXd power_iteration(const Eigen::MatrixXd& kernel, double tol) {
  const auto n = kernel.rows();
  Eigen::VectorXd omega = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd transposed = kernel.transpose();
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < kPowerIterationBudget; ++it) {
    Eigen::VectorXd next = transposed * omega;
    next /= next.sum();
    residual = (next - omega).lpNorm<1>();
    omega.swap(next);
    if (residual <= tol) return omega;
  }
  throw ConvergenceError("stationary distribution: power iteration stalled (chain reducible or periodic?)",
                         residual);
}

std::string pair_name(std::size_t z, std::size_t A) {
  return "(s=" + std::to_string(z / A) + ", a=" + std::to_string(z % A) + ")";
}

}  // namespace

StateActionChain state_action_kernel(const TabularMdp& mdp, const StochasticPolicy& policy) {
  require_same_shape(mdp, policy);
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const auto n = static_cast<Eigen::Index>(S * A);
  StateActionChain chain{Eigen::MatrixXd::Zero(n, n), S, A};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto z = static_cast<Eigen::Index>(s * A + a);
      const auto row = mdp.row(s, a);
      for (std::size_t next = 0; next < S; ++next) {
        if (row[next] == 0.0) continue;
        for (std::size_t b = 0; b < A; ++b) {
          chain.kernel(z, static_cast<Eigen::Index>(next * A + b)) = row[next] * policy(next, b);
        }
      }
    }
  }
  return chain;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel, double tol) {
  const auto n = kernel.rows();
  if (n == 0 || kernel.cols() != n) throw ValidationError("stationary_distribution: kernel must be square");

  Eigen::MatrixXd system = kernel.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (lu.isInvertible()) {
    Eigen::VectorXd omega = lu.solve(rhs);
    // Round-off can leave entries like -1e-18 on the boundary of the simplex.
    if (omega.minCoeff() > -1e-12) {
      omega = omega.cwiseMax(0.0);
      omega /= omega.sum();
      if (stationarity_residual(kernel, omega) <= tol) return omega;
    }
  }
  return power_iteration(kernel, tol);
}

Connectivity connectivity(const TabularMdp& mdp) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  std::vector<std::vector<std::size_t>> successors(S);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t next = 0; next < S; ++next) {
      for (std::size_t a = 0; a < A; ++a) {
        if (mdp.transition(s, a, next) > 0.0) {
          successors[s].push_back(next);
          break;
        }
      }
    }
  }

  Connectivity out{1, 1};
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  for (std::size_t source = 0; source < S; ++source) {
    // dist[v] = length of the shortest path of at least one edge from source to v.
    std::vector<std::size_t> dist(S, kUnreached);
    std::deque<std::size_t> frontier;
    for (std::size_t next : successors[source]) {
      if (dist[next] == kUnreached) {
        dist[next] = 1;
        frontier.push_back(next);
      }
    }
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop_front();
      for (std::size_t w : successors[v]) {
        if (dist[w] == kUnreached) {
          dist[w] = dist[v] + 1;
          frontier.push_back(w);
        }
      }
    }
    for (std::size_t target = 0; target < S; ++target) {
      if (dist[target] == kUnreached) {
        if (target == source && S == 1) continue;
        throw ValidationError("MDP is not communicating: state " + std::to_string(target) +
                              " unreachable from state " + std::to_string(source));
      }
      if (target != source) out.m = std::max(out.m, dist[target]);
      out.m_with_self_pairs = std::max(out.m_with_self_pairs, dist[target]);
    }
  }
  return out;
}

std::size_t mixing_time(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& omega,
                        std::size_t max_steps) {
  Eigen::MatrixXd power = kernel;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    double worst = 0.0;
    for (Eigen::Index z = 0; z < power.rows(); ++z) {
      worst = std::max(worst, 0.5 * (power.row(z).transpose() - omega).lpNorm<1>());
    }
    if (worst <= 0.25) return n;
    power = power * kernel;
  }
  throw ConvergenceError("mixing time exceeds the step budget", 0.0);
}

ErgodicityReport ergodicity_report(const TabularMdp& mdp, double tol) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t n = S * A;

  ErgodicityReport report;
  report.num_states = S;
  report.num_actions = A;
  const auto conn = connectivity(mdp);
  report.m = conn.m;
  report.m_with_self_pairs = conn.m_with_self_pairs;

  const auto chain = state_action_kernel(mdp, StochasticPolicy::uniform(S, A));
  const Eigen::MatrixXd& kernel = chain.kernel;

  const std::size_t cap = std::max(n * (report.m + 1), 4 * n);
  Eigen::MatrixXd power = kernel;
  std::size_t r = 0;
  for (std::size_t ell = 1; ell <= cap; ++ell) {
    if ((power.array() > 0.0).all()) {
      r = ell;
      break;
    }
    if (ell < cap) power = power * kernel;
  }
  if (r == 0) {
    Eigen::Index zi = 0;
    Eigen::Index zj = 0;
    power.minCoeff(&zi, &zj);
    throw ValidationError("uniform-policy chain is not ergodic: no path from " +
                          pair_name(static_cast<std::size_t>(zi), A) + " to " +
                          pair_name(static_cast<std::size_t>(zj), A) + " after " +
                          std::to_string(cap) + " steps");
  }
  report.r = r;
  report.aperiodic_uniform = true;
  report.omega_u = stationary_distribution(kernel, tol);

  double sigma = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < power.rows(); ++i) {
    for (Eigen::Index j = 0; j < power.cols(); ++j) {
      sigma = std::min(sigma, power(i, j) / report.omega_u(j));
    }
  }
  report.sigma_u = std::min(sigma, 1.0);

  auto min_positive = [](const Eigen::MatrixXd& m) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double v = m.data()[k];
      if (v > 0.0) best = std::min(best, v);
    }
    return best;
  };
  report.eta1 = min_positive(kernel);
  report.eta2 = report.eta1;
  Eigen::MatrixXd walk = kernel;
  for (std::size_t step = 2; step <= report.m + 1; ++step) {
    walk = walk * kernel;
    report.eta2 = std::min(report.eta2, min_positive(walk));
  }
  report.eta = report.eta1 * report.eta2;
  report.t_mix = mixing_time(kernel, report.omega_u);
  return report;
}

GeometricConstants geometric_constants(double epsilon, double policy_floor,
                                       std::span<const double> omega,
                                       const ErgodicityReport& report) {
  const std::size_t n = report.num_states * report.num_actions;
  if (omega.size() != n || static_cast<std::size_t>(report.omega_u.size()) != n) {
    throw ValidationError("geometric_constants: omega has the wrong length");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0) || policy_floor < 0.0) {
    throw DomainError("geometric_constants: epsilon must lie in [0, 1] and the floor be >= 0");
  }
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < n; ++z) {
    if (!(omega[z] > 0.0)) throw DomainError("geometric_constants: omega must be strictly positive");
    ratio = std::min(ratio, report.omega_u(static_cast<Eigen::Index>(z)) / omega[z]);
  }
  const double r = static_cast<double>(report.r);
  const double mix = std::pow(epsilon, r) +
                     std::pow((1.0 - epsilon) * static_cast<double>(report.num_actions) * policy_floor, r);

  GeometricConstants out;
  out.sigma = mix * report.sigma_u * ratio;
  out.theta = 1.0 - out.sigma;
  if (!(out.theta > 0.0 && out.theta < 1.0)) {
    throw DomainError("geometric_constants: theta = " + std::to_string(out.theta) +
                      " is outside (0, 1)");
  }
  out.C = 2.0 / out.theta;
  out.rho = std::pow(out.theta, 1.0 / r);
  out.L = out.C / (1.0 - out.rho);
  return out;
}

double forced_exploration_lambda(double alpha, const ErgodicityReport& report, std::size_t num_pairs) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("forced_exploration_lambda: alpha must lie in (0, 1)");
  if (!(report.eta > 0.0)) throw DomainError("forced_exploration_lambda: eta must be positive");
  const double m1 = static_cast<double>(report.m + 1);
  const double log_term = std::log1p(static_cast<double>(num_pairs) / alpha);
  return m1 * m1 / (report.eta * report.eta) * log_term * log_term;
}

double condition_number(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& omega) {
  const auto n = kernel.rows();
  if (kernel.cols() != n || omega.size() != n) throw ValidationError("condition_number: shape mismatch");
  Eigen::MatrixXd fundamental = Eigen::MatrixXd::Identity(n, n) - kernel +
                                Eigen::VectorXd::Ones(n) * omega.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fundamental);
  if (!lu.isInvertible()) throw DomainError("condition_number: I - K + 1 omega^T is singular");
  const Eigen::MatrixXd inverse = lu.inverse();
  return inverse.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace mdpnas

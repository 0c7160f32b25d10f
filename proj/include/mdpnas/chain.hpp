#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>

#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

/// Markov chain on state-action pairs z = s * A + a induced by a policy:
/// K((s,a),(s',a')) = p(s'|s,a) pi(a'|s').
struct StateActionChain {
  Eigen::MatrixXd kernel;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
};

StateActionChain state_action_kernel(const TabularMdp& mdp, const StochasticPolicy& policy);

inline constexpr double kStationaryTolerance = 1e-12;

/// Stationary distribution of a row-stochastic kernel.
///
/// Solves the stationarity system with one equation replaced by the
/// normalisation row; falls back to power iteration (10^6 steps) when that
/// system is singular. Throws ConvergenceError when neither reaches `tol`.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel,
                                        double tol = kStationaryTolerance);
inline Eigen::VectorXd stationary_distribution(const StateActionChain& chain,
                                               double tol = kStationaryTolerance) {
  return stationary_distribution(chain.kernel, tol);
}

struct Connectivity {
  /// Max over ordered pairs s != s' of the shortest path length.
  std::size_t m = 1;
  /// Same maximum when the return times s -> s are included.
  std::size_t m_with_self_pairs = 1;
};

/// Shortest-path diameter of the state graph with an edge s -> s'' whenever
/// some action reaches s'' with positive probability. Throws ValidationError
/// naming an unreachable pair when the MDP is not communicating.
Connectivity connectivity(const TabularMdp& mdp);
inline std::size_t connectivity_m(const TabularMdp& mdp) { return connectivity(mdp).m; }

struct ErgodicityReport {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t m = 1;
  std::size_t m_with_self_pairs = 1;
  /// Smallest power making the uniform-policy chain entrywise positive.
  std::size_t r = 1;
  double sigma_u = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta = 0.0;
  Eigen::VectorXd omega_u;
  std::size_t t_mix = 0;
  bool aperiodic_uniform = false;
};

/// Ergodicity constants of the uniform-policy chain. Throws ValidationError
/// when that chain is not ergodic, naming a pair (z, z') that stays zero.
ErgodicityReport ergodicity_report(const TabularMdp& mdp, double tol = kStationaryTolerance);

/// Mixing time: smallest n >= 1 with max_z TV(K^n(z, .), omega) <= 1/4.
std::size_t mixing_time(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& omega,
                        std::size_t max_steps = 1'000'000);

struct GeometricConstants {
  double sigma = 0.0;
  double theta = 0.0;
  double C = 0.0;
  double rho = 0.0;
  double L = 0.0;
};

/// Geometric-ergodicity constants of the navigation kernel
/// eps * P_uniform + (1 - eps) * P_pi, where pi has smallest entry
/// `policy_floor` and `omega` is its stationary distribution:
///   sigma = (eps^r + ((1-eps) A floor)^r) sigma_u min_z omega_u(z)/omega(z),
///   theta = 1 - sigma, C = 2/theta, rho = theta^{1/r}, L = C/(1-rho).
/// Throws DomainError unless theta lies strictly inside (0, 1).
GeometricConstants geometric_constants(double epsilon, double policy_floor,
                                       std::span<const double> omega,
                                       const ErgodicityReport& report);

/// lambda_alpha = (m+1)^2 / eta^2 * log^2(1 + SA / alpha).
double forced_exploration_lambda(double alpha, const ErgodicityReport& report, std::size_t num_pairs);

/// kappa = || (I - K + 1 omega^T)^{-1} ||_inf.
double condition_number(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& omega);
inline double condition_number(const StateActionChain& chain, const Eigen::VectorXd& omega) {
  return condition_number(chain.kernel, omega);
}

}  // namespace mdpnas

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mdpnas/allocation.hpp"
#include "mdpnas/chain.hpp"
#include "mdpnas/errors.hpp"
#include "mdpnas/instances.hpp"
#include "oracles.hpp"

using namespace mdpnas;
using doctest::Approx;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

// Stationary state-action distribution of a random full-support policy: a
// strictly positive point of the navigation polytope.
std::vector<double> random_feasible(const TabularMdp& mdp, std::mt19937_64& rng) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  std::exponential_distribution<double> e(1.0);
  std::vector<double> probs(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < A; ++a) total += (probs[s * A + a] = e(rng) + 0.05);
    for (std::size_t a = 0; a < A; ++a) probs[s * A + a] /= total;
  }
  const auto chain = state_action_kernel(mdp, StochasticPolicy(S, A, probs));
  return to_std(stationary_distribution(chain));
}

// Hardness recomputed from the value-iteration oracle.
double reference_hardness(const TabularMdp& mdp, const std::vector<double>& v, std::size_t s,
                          std::size_t a, double gap) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double sp = hi - lo;
  const double var = oracle::next_state_variance(mdp, v, s, a);
  return 2.0 / (gap * gap) +
         std::max(16.0 * var / (gap * gap), 6.0 * std::pow(sp, 4.0 / 3.0) / std::pow(gap, 4.0 / 3.0));
}

}  // namespace

TEST_CASE("hardness on the one-state instance") {
  const auto mdp = fixtures::bandit(0.9, 0.5, 0.0);
  const auto profile = hardness_profile(solve_optimal(mdp), 0.0);
  CHECK(profile.hardness[0] == 0.0);
  CHECK(profile.hardness[1] == Approx(12.5).epsilon(1e-12));
  CHECK(profile.t3 == Approx(12.5).epsilon(1e-12));
  CHECK(profile.t4 == 0.0);
  CHECK(profile.h_star == Approx(12.5).epsilon(1e-12));
  CHECK(profile.is_optimal_pair(0, 0));
}

TEST_CASE("hardness scaling laws") {
  ValueSolution sol;
  sol.optimal_value = {0.0, 0.0};
  sol.optimal_q = {0.0, -0.2, 0.0, -0.4};
  sol.optimal_policy = {0, 0};
  sol.gaps = {0.0, 0.2, 0.0, 0.4};
  sol.min_gap = 0.2;
  sol.span = 0.0;
  sol.value_variance = {0, 0, 0, 0};
  sol.unique_optimum = true;
  const auto p = hardness_profile(sol, 0.5);
  CHECK(p.hardness[1] == Approx(2.0 / 0.04));
  CHECK(p.hardness[3] == Approx(2.0 / 0.16));

  auto doubled = sol;
  doubled.min_gap = 0.4;
  doubled.gaps = {0.0, 0.4, 0.0, 0.8};
  CHECK(hardness_profile(doubled, 0.5).t3 == Approx(p.t3 / 4.0));

  sol.unique_optimum = false;
  CHECK_THROWS_AS(hardness_profile(sol, 0.5), UniquenessError);
}

TEST_CASE("hardness matches an independent recomputation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = gen_random_ergodic(3 + seed % 3, 2 + seed % 2, 0.9, 200 + seed);
    const auto sol = solve_optimal(mdp);
    if (!sol.unique_optimum) continue;
    const auto profile = hardness_profile(sol, mdp.gamma());
    const auto v = oracle::value_iteration(mdp);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    double var_max = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      var_max = std::max(var_max, oracle::next_state_variance(mdp, v, s, sol.optimal_policy[s]));
      for (std::size_t a = 0; a < A; ++a) {
        if (a == sol.optimal_policy[s]) continue;
        const double gap = v[s] - oracle::q_of(mdp, v, s, a);
        CHECK(profile.hardness[s * A + a] == Approx(reference_hardness(mdp, v, s, a, gap)).epsilon(1e-6));
        CHECK(profile.hardness[s * A + a] > 0.0);
        CHECK(std::isfinite(profile.hardness[s * A + a]));
      }
    }
    const double d = sol.min_gap;
    const double g = 1.0 - mdp.gamma();
    const double t3 = 2.0 / (d * d * g * g);
    const double t4 = std::min(27.0 / (d * d * g * g * g),
                               std::max(16.0 * var_max / (d * d * g * g),
                                        6.0 * std::pow(sol.span, 4.0 / 3.0) / std::pow(d * g, 4.0 / 3.0)));
    CHECK(profile.t3 == Approx(t3).epsilon(1e-9));
    CHECK(profile.t4 == Approx(t4).epsilon(1e-6));
    CHECK(std::abs(profile.h_star - static_cast<double>(S) * (profile.t3 + profile.t4)) <= 1e-9 * profile.h_star);
  }
}

TEST_CASE("navigation_residual examples") {
  const auto mdp = gen_random_ergodic(4, 3, 0.9, 8);
  std::mt19937_64 rng(1);
  CHECK(max_navigation_residual(mdp, random_feasible(mdp, rng)) <= 1e-9);

  const auto bandit = fixtures::bandit(0.2, 0.7, 0.5);
  const std::vector<double> lopsided{0.9, 0.1};
  CHECK(max_navigation_residual(bandit, lopsided) == 0.0);

  const auto chain = fixtures::deterministic({{1, 1}, {0, 0}}, {0, 0, 0, 0}, 0.5);
  const std::vector<double> point{1.0, 0.0, 0.0, 0.0};
  const auto residual = navigation_residual(chain, point);
  CHECK(residual[0] == 1.0);
  CHECK(residual[1] == 1.0);
}

TEST_CASE("project_feasible examples") {
  const auto bandit = fixtures::bandit(0.2, 0.7, 0.5);
  const std::vector<double> x{2.0, 0.0};
  const auto p = project_feasible(bandit, x);
  CHECK(p.weights[0] == Approx(1.0).epsilon(1e-10));
  CHECK(p.weights[1] == Approx(0.0).epsilon(1e-10));

  // Doubly stochastic transitions: uniform is a fixed point.
  const TabularMdp doubly(2, 2, 0.5, {0.5, 0.5, 0.3, 0.7, 0.5, 0.5, 0.7, 0.3}, {0, 0, 0, 0});
  const std::vector<double> uniform(4, 0.25);
  const auto u = project_feasible(doubly, uniform);
  for (double w : u.weights) CHECK(w == Approx(0.25).epsilon(1e-10));

  std::vector<double> wrong(3, 0.1);
  CHECK_THROWS_AS(project_feasible(doubly, wrong), ValidationError);
}

TEST_CASE("projection is idempotent and non-expansive") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mdp = gen_random_ergodic(3, 3, 0.9, 30 + seed);
    const FeasibleProjector projector(mdp);
    const auto anchor = random_feasible(mdp, rng);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(9);
      for (double& v : x) v = 1.0 / 9.0 + normal(rng);
      const auto p = projector.project(x, 1e-10, 10000);
      double sum = 0.0;
      for (double w : p.weights) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      CHECK(p.feasibility_residual <= 1e-9);
      CHECK(max_navigation_residual(mdp, p.weights) <= 1e-9);

      const auto again = projector.project(p.weights, 1e-10, 10000);
      for (std::size_t z = 0; z < 9; ++z) CHECK(std::abs(again.weights[z] - p.weights[z]) <= 1e-9);

      double before = 0.0, after = 0.0;
      for (std::size_t z = 0; z < 9; ++z) {
        before += (x[z] - anchor[z]) * (x[z] - anchor[z]);
        after += (p.weights[z] - anchor[z]) * (p.weights[z] - anchor[z]);
      }
      CHECK(std::sqrt(after) <= std::sqrt(before) + 1e-9);
    }
  }
}

TEST_CASE("project_simplex matches the sort-based formula") {
  Eigen::VectorXd x(4);
  x << 0.5, -0.2, 0.9, 0.1;
  project_simplex(x);
  // Threshold tau = (0.9 + 0.5 - 1) / 2 = 0.2.
  CHECK(x(0) == Approx(0.3));
  CHECK(x(1) == 0.0);
  CHECK(x(2) == Approx(0.7));
  CHECK(x(3) == 0.0);
}

TEST_CASE("upper_bound_U examples") {
  const auto mdp = fixtures::bandit(0.9, 0.5, 0.0);
  const auto profile = hardness_profile(solve_optimal(mdp), 0.0);
  const std::vector<double> half{0.5, 0.5};
  CHECK(upper_bound_U(profile, half) == Approx(50.0).epsilon(1e-12));
  const std::vector<double> starved{0.0, 1.0};
  CHECK(upper_bound_U(profile, starved) == std::numeric_limits<double>::infinity());

  auto scaled = profile;
  for (double& h : scaled.hardness) h *= 2.0;
  scaled.h_star *= 2.0;
  const std::vector<double> w{0.3, 0.7};
  CHECK(upper_bound_U(scaled, w) == Approx(2.0 * upper_bound_U(profile, w)));
}

TEST_CASE("U is convex and dominates each ratio") {
  std::mt19937_64 rng(23);
  int probes = 0;
  for (std::uint64_t seed = 0; probes < 50; ++seed) {
    const auto mdp = gen_random_ergodic(3, 3, 0.8, 600 + seed);
    const auto sol = solve_optimal(mdp);
    if (!sol.unique_optimum) continue;
    const auto profile = hardness_profile(sol, mdp.gamma());
    for (int k = 0; k < 5; ++k, ++probes) {
      const auto w1 = random_feasible(mdp, rng);
      const auto w2 = random_feasible(mdp, rng);
      const double u1 = upper_bound_U(profile, w1);
      const double u2 = upper_bound_U(profile, w2);
      for (double lambda : {0.25, 0.5, 0.75}) {
        std::vector<double> mix(9);
        for (std::size_t z = 0; z < 9; ++z) mix[z] = lambda * w1[z] + (1.0 - lambda) * w2[z];
        CHECK(upper_bound_U(profile, mix) <= lambda * u1 + (1.0 - lambda) * u2 + 1e-9 * (u1 + u2));
      }
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t a = 0; a < 3; ++a)
          if (a != sol.optimal_policy[s]) CHECK(u1 >= profile.hardness[s * 3 + a] / w1[s * 3 + a]);
    }
  }
}

TEST_CASE("oracle allocation on the one-state instance") {
  const auto mdp = fixtures::bandit(0.9, 0.5, 0.0);
  const auto sol = solve_optimal(mdp);
  const auto oracle = solve_oracle_allocation(mdp, sol);
  CHECK(std::abs(oracle.allocation.weights[0] - 0.5) <= 1e-6);
  CHECK(std::abs(oracle.allocation.weights[1] - 0.5) <= 1e-6);
  CHECK(std::abs(oracle.value - 50.0) <= 1e-6);

  SolverOptions warm;
  warm.warm_start = oracle.allocation;
  const auto again = solve_oracle_allocation(mdp, sol, warm);
  CHECK(again.value <= oracle.value);
  CHECK(std::abs(again.allocation.weights[0] - oracle.allocation.weights[0]) <= 1e-9);
}

TEST_CASE("oracle allocation on random instances") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto mdp = gen_random_ergodic(2 + seed % 3, 2 + seed % 2, 0.8, 900 + seed);
    const auto sol = solve_optimal(mdp);
    if (!sol.unique_optimum) continue;
    CAPTURE(seed);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    const auto result = solve_oracle_allocation(mdp, sol);
    const auto& w = result.allocation.weights;

    double sum = 0.0;
    for (double x : w) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(result.allocation.feasibility_residual <= 1e-9);
    CHECK(max_navigation_residual(mdp, w) <= 1e-9);
    CHECK(result.value == upper_bound_U(hardness_profile(sol, mdp.gamma()), w));

    // Never worse than the uniform-policy starting point.
    const auto start = to_std(stationary_distribution(state_action_kernel(mdp, StochasticPolicy::uniform(S, A))));
    CHECK(result.value <= upper_bound_U(hardness_profile(sol, mdp.gamma()), start));

    // Round trip: omega* is stationary for its own oracle policy.
    const auto pi = oracle_policy(w, S, A);
    const auto omega = stationary_distribution(state_action_kernel(mdp, pi));
    double l1 = 0.0;
    for (std::size_t z = 0; z < S * A; ++z) l1 += std::abs(omega(z) - w[z]);
    CHECK(l1 <= 1e-6);
  }
}

TEST_CASE("oracle_policy examples") {
  const std::vector<double> uniform(6, 1.0 / 6.0);
  const auto u = oracle_policy(uniform, 3, 2);
  for (double p : u.probabilities()) CHECK(p == Approx(0.5));
  const std::vector<double> on_pi{0.0, 0.4, 0.6, 0.0};
  const auto d = oracle_policy(on_pi, 2, 2);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 0) == 1.0);
  const std::vector<double> empty_state{0.5, 0.5, 0.0, 0.0};
  CHECK_THROWS_AS(oracle_policy(empty_state, 2, 2), DomainError);
}

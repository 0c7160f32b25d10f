// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   mdpnas_acceptance [--only N[,N...]] [--expect-fail N[,N...]]
//
// With --expect-fail the exit status is 0 exactly when the failing set equals
// the given set; the per-criterion lines are unchanged. This is how ctest
// tracks a criterion known to be out of reach without hiding its FAIL line.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdpnas/allocation.hpp"
#include "mdpnas/bench.hpp"
#include "mdpnas/chain.hpp"
#include "mdpnas/instances.hpp"
#include "mdpnas/planning.hpp"
#include "mdpnas/stopping.hpp"

using namespace mdpnas;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

std::set<int> parse_list(const char* text) {
  std::set<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.insert(std::stoi(item));
  return out;
}

TabularMdp bandit() { return TabularMdp(1, 2, 0.0, {1.0, 1.0}, {0.9, 0.5}); }

// RiverSwim-5 campaign shared by criteria 1 and 3: run i uses seed 2024 ^ i,
// so its first 30 runs are exactly the 30-run campaign of criterion 1.
const BenchSummary& riverswim_campaign() {
  static const BenchSummary summary = [] {
    RunConfig config;
    config.mode = NavigationMode::direct;
    config.schedule = ScheduleKind::theorem;
    config.delta = 0.1;
    config.recompute_period = 10'000;
    config.trace_period = 1'000'000;
    config.seed = 2024;
    return monte_carlo(river_swim(5, 0.95), config, 50, 0);
  }();
  return summary;
}

Outcome criterion_riverswim_complexity() {
  const auto& all = riverswim_campaign();
  const auto first = summarize(std::vector<RunRecord>(all.runs.begin(), all.runs.begin() + 30));
  const bool in_band = first.n_capped == 0 && first.mean_tau >= 8e5 && first.mean_tau <= 8e6;
  return {in_band && first.error_rate == 0.0,
          fmt("mean tau %.4g over 30 runs (band [8e5, 8e6]), median %.4g, capped %zu, error rate %.3g",
              first.mean_tau, first.median_tau, first.n_capped, first.error_rate)};
}

Outcome criterion_frequency_convergence() {
  struct Case {
    const char* name;
    TabularMdp mdp;
  };
  const std::vector<Case> cases{{"ergodic-5x5", gen_random_ergodic(5, 5, 0.7, 0)},
                                {"riverswim-5", river_swim(5, 0.95)}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    for (auto mode : {NavigationMode::cesaro, NavigationMode::direct}) {
      RunConfig config;
      config.mode = mode;
      config.schedule = ScheduleKind::ergodic;
      config.stopping = false;
      config.max_steps = 1'000'000;
      config.recompute_period = 10'000;
      config.trace_period = 100'000'000;
      config.checkpoints = {100'000, 1'000'000};
      config.seed = 77;
      const auto summary = monte_carlo(c.mdp, config, 30, 0);
      double early = NAN, late = NAN;
      for (const auto& q : summary.checkpoints) {
        if (q.t == 100'000) early = q.q50;
        if (q.t == 1'000'000) late = q.q50;
      }
      const bool ok = late < early;
      pass = pass && ok;
      detail += fmt("%s%s/%s median log10 rel dist %.3f -> %.3f", detail.empty() ? "" : "; ", c.name,
                    std::string(to_string(mode)).c_str(), early, late);
    }
  }
  return {pass, detail};
}

Outcome criterion_delta_pc() {
  RunConfig config;
  config.delta = 0.1;
  config.recompute_period = 1000;
  config.trace_period = 100'000'000;
  config.seed = 99;
  const auto b = monte_carlo(bandit(), config, 50, 0);
  const auto e = monte_carlo(gen_random_ergodic(3, 2, 0.7, 0), config, 50, 0);
  const auto& r = riverswim_campaign();
  const bool pass = b.error_rate <= 0.1 && e.error_rate <= 0.1 && r.error_rate <= 0.1;
  return {pass, fmt("error rates: bandit %.3g (%zu capped), ergodic-3 %.3g (%zu capped), riverswim-5 %.3g "
                    "(%zu capped), 50 runs each",
                    b.error_rate, b.n_capped, e.error_rate, e.n_capped, r.error_rate, r.n_capped)};
}

Outcome criterion_threshold_coverage() {
  const TabularMdp mdp(2, 2, 0.8, {0.7, 0.3, 0.2, 0.8, 0.4, 0.6, 0.9, 0.1}, {0.3, 0.6, 0.8, 0.2});
  const ThresholdConfig config{0.1, 2, 2};
  constexpr int kRuns = 1000;
  int vp = 0, vr = 0;
  for (int run = 0; run < kRuns; ++run) {
    Rng rng(static_cast<std::uint64_t>(run));
    std::vector<std::uint64_t> n(4, 0), nr(4, 0), ns(8, 0);
    std::vector<double> kp(4, 0.0), kr(4, 0.0);
    std::size_t s = 0;
    bool hit_p = false, hit_r = false;
    for (int t = 0; t < 10'000 && !(hit_p && hit_r); ++t) {
      const std::size_t a = uniform01(rng) < 0.5 ? 0 : 1;
      const std::size_t z = s * 2 + a;
      const int reward = uniform01(rng) < mdp.reward(s, a) ? 1 : 0;
      const std::size_t next = uniform01(rng) < mdp.transition(s, a, 0) ? 0 : 1;
      ++n[z];
      nr[z] += reward;
      ++ns[z * 2 + next];
      const double nz = static_cast<double>(n[z]);
      const double phat[2] = {ns[z * 2] / nz, ns[z * 2 + 1] / nz};
      kp[z] = nz * kl_categorical(phat, mdp.row(s, a));
      kr[z] = nz * kl_bernoulli(nr[z] / nz, mdp.reward(s, a));
      if (kp[0] + kp[1] + kp[2] + kp[3] > beta_transitions(n, config)) hit_p = true;
      if (kr[0] + kr[1] + kr[2] + kr[3] > beta_rewards(n, config)) hit_r = true;
      s = next;
    }
    vp += hit_p;
    vr += hit_r;
  }
  const double fp = static_cast<double>(vp) / kRuns;
  const double fr = static_cast<double>(vr) / kRuns;
  return {fp <= 0.1 && fr <= 0.1,
          fmt("any-time violation frequency beta_p %.4f, beta_r %.4f (1000 runs, T = 1e4)", fp, fr)};
}

Outcome criterion_allocation_solver() {
  double worst_residual = 0.0, worst_roundtrip = 0.0, worst_gap = 0.0;
  int solved = 0;
  for (std::uint64_t seed = 0; solved < 20; ++seed) {
    const std::size_t S = 2 + seed % 4;
    const std::size_t A = 2 + (seed / 4) % 4;
    const auto mdp = gen_random_ergodic(S, A, 0.8, 5000 + seed);
    const auto sol = solve_optimal(mdp);
    if (!sol.unique_optimum) continue;
    ++solved;
    const SolverOptions options;
    const auto result = solve_oracle_allocation(mdp, sol, options);
    SolverOptions big = options;
    big.max_iters *= 10;
    big.stall_window *= 10;
    const auto reference = solve_oracle_allocation(mdp, sol, big);

    const auto& w = result.allocation.weights;
    worst_residual = std::max(worst_residual, max_navigation_residual(mdp, w));
    const auto omega = stationary_distribution(state_action_kernel(mdp, oracle_policy(w, S, A)));
    double l1 = 0.0;
    for (std::size_t z = 0; z < S * A; ++z) l1 += std::abs(omega(z) - w[z]);
    worst_roundtrip = std::max(worst_roundtrip, l1);
    worst_gap = std::max(worst_gap, (result.value - reference.value) / reference.value);
  }
  const auto analytic = solve_oracle_allocation(bandit(), solve_optimal(bandit()));
  const double w_err = std::max(std::abs(analytic.allocation.weights[0] - 0.5),
                                std::abs(analytic.allocation.weights[1] - 0.5));
  const double u_err = std::abs(analytic.value - 50.0);
  const bool pass = worst_residual <= 1e-9 && worst_roundtrip <= 1e-6 && worst_gap <= 0.01 && w_err <= 1e-6 &&
                    u_err <= 1e-6;
  return {pass, fmt("20 instances: max residual %.2g, max round-trip %.2g, max excess over reference %.3g%%; "
                    "analytic |w-0.5| %.2g, |U-50| %.2g",
                    worst_residual, worst_roundtrip, 100.0 * worst_gap, w_err, u_err)};
}

Outcome criterion_chain_bounds() {
  int probes = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = gen_random_ergodic(3, 2, 0.9, 7000 + seed);
    const auto report = ergodicity_report(mdp);
    const Eigen::MatrixXd k = state_action_kernel(mdp, StochasticPolicy::uniform(3, 2)).kernel;
    const Eigen::MatrixXd w = Eigen::VectorXd::Ones(k.rows()) * report.omega_u.transpose();
    const double theta = 1.0 - report.sigma_u;
    Eigen::MatrixXd power = k;
    for (int n = 1; n <= 50; ++n, power = power * k) {
      const double lhs = (power - w).cwiseAbs().rowwise().sum().maxCoeff();
      const double rhs = 2.0 * std::pow(theta, static_cast<double>(n) / static_cast<double>(report.r) - 1.0);
      ++probes;
      if (lhs > rhs + 1e-12) ++violations;
    }
  }
  std::mt19937_64 rng(31);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd k1(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) k1(i, j) = e(rng) + 1e-3;
      k1.row(i) /= k1.row(i).sum();
    }
    Eigen::MatrixXd k2 = k1;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) k2(i, j) += noise(rng);
      k2.row(i) /= k2.row(i).sum();
    }
    const auto w1 = stationary_distribution(k1);
    const auto w2 = stationary_distribution(k2);
    const double rhs = condition_number(k1, w1) * (k2 - k1).cwiseAbs().rowwise().sum().maxCoeff();
    ++probes;
    if ((w2 - w1).lpNorm<1>() > rhs + 1e-9) ++violations;
  }
  return {violations == 0, fmt("%d probes (500 geometric-ergodicity, 20 Schweitzer), %d violations", probes,
                               violations)};
}

Outcome criterion_vrql() {
  const auto rs = vrql_complexity(river_swim(5, 0.95), 0.1);
  VrqlInputs in;
  in.mu_min = 0.2;
  in.t_mix = 4;
  in.gamma = 0.9;
  in.epsilon = 0.1;
  in.delta = 0.1;
  in.num_states = 2;
  in.num_actions = 2;
  const auto example = vrql_complexity(in);
  const double ratio = rs.total / 3.3e9;
  const double rel = std::abs(example.total - 8.3e9) / 8.3e9;
  return {ratio >= 0.1 && ratio <= 10.0 && rel <= 0.01,
          fmt("riverswim-5 total %.4g (%.3gx the 3.3e9 reference; mu_min %.4g, t_mix %.0f); example total %.4g "
              "(%.2f%% from 8.3e9)",
              rs.total, ratio, rs.inputs.mu_min, rs.inputs.t_mix, example.total, 100.0 * rel)};
}

Outcome criterion_starvation() {
  const auto slow = starvation_demo(6, 1.0, 100'000, 200, 8);
  const auto fast = starvation_demo(6, 1.0 / 5.0, 100'000, 200, 8);
  return {slow.reach_fraction <= 0.5 * fast.reach_fraction,
          fmt("reach fraction alpha=1: %.3f, alpha=1/5: %.3f; bound violations %zu and %zu", slow.reach_fraction,
              fast.reach_fraction, slow.violations, fast.violations)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expect_fail = parse_list(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N,...] [--expect-fail N,...]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"riverswim-5 sample complexity", criterion_riverswim_complexity},
      {"visit-frequency convergence", criterion_frequency_convergence},
      {"delta-PC error rate", criterion_delta_pc},
      {"deviation-threshold coverage", criterion_threshold_coverage},
      {"allocation solver", criterion_allocation_solver},
      {"chain bounds", criterion_chain_bounds},
      {"VRQL complexity", criterion_vrql},
      {"starvation demonstration", criterion_starvation},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) failed.insert(id);
    std::printf("criterion %d %s: %s [%.0fs] %s\n", id, outcome.pass ? "PASS" : "FAIL", criteria[i].first,
                seconds, outcome.detail.c_str());
    std::fflush(stdout);
  }

  if (!expect_fail.empty()) {
    std::set<int> expected;
    for (int id : expect_fail)
      if (only.empty() || only.contains(id)) expected.insert(id);
    if (failed != expected) {
      std::printf("failing set differs from the expected one\n");
      return 1;
    }
    return 0;
  }
  return failed.empty() ? 0 : 1;
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mdpnas/allocation.hpp"
#include "mdpnas/navigation.hpp"
#include "mdpnas/tabular_mdp.hpp"

namespace mdpnas {

struct RunConfig {
  NavigationMode mode = NavigationMode::direct;
  ScheduleKind schedule = ScheduleKind::ergodic;
  /// Connectivity parameter for the communicating/theorem schedules;
  /// computed from the instance when unset.
  std::optional<std::size_t> m;
  double delta = 0.1;
  std::uint64_t recompute_period = 1000;
  std::uint64_t trace_period = 10'000;
  std::uint64_t max_steps = 100'000'000;
  std::uint64_t seed = 0;
  /// When false the stopping rule is never consulted and every run lasts
  /// exactly max_steps (fixed-horizon traces).
  bool stopping = true;
  /// Extra trace times on top of the multiples of trace_period.
  std::vector<std::uint64_t> checkpoints;
  SolverOptions solver;
};

/// Throws ValidationError on an out-of-range field.
void validate(const RunConfig& config);

struct TraceRow {
  std::uint64_t t = 0;
  double eps = 0.0;
  std::uint64_t min_visits = 0;
  /// log10(max_z |N_z(t)/t - w*_z| / w*_z) against the true oracle allocation.
  double rel_dist_log10 = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  /// Stopping time, or max_steps when the cap was hit.
  std::uint64_t tau = 0;
  std::vector<std::size_t> answered_policy;
  /// Meaningful only when hit_cap is false.
  bool correct = false;
  bool hit_cap = false;
  /// max_z |N_z/tau - w*_z| / w*_z and max_z |N_z/tau - w*_z| at the end of the run.
  double final_rel_dist = 0.0;
  double final_abs_dist = 0.0;
  std::size_t skipped_recomputes = 0;
  std::vector<TraceRow> trace;
};

/// Ground-truth quantities shared by every run on one instance.
struct BenchTarget {
  std::vector<std::size_t> optimal_policy;
  /// Oracle allocation of the true MDP; empty when its optimum is tied.
  std::vector<double> oracle_weights;
  double oracle_value = 0.0;
  std::size_t m = 1;
};

BenchTarget bench_target(const TabularMdp& mdp, const SolverOptions& solver = {});

RunRecord run_once(const TabularMdp& mdp, const RunConfig& config);
RunRecord run_once(const TabularMdp& mdp, const RunConfig& config, const BenchTarget& target);

struct CheckpointQuantiles {
  std::uint64_t t = 0;
  /// Number of runs that reached this trace time.
  std::size_t n = 0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

struct BenchSummary {
  std::size_t n_runs = 0;
  std::size_t n_capped = 0;
  /// Statistics of tau over the runs that stopped before the cap; NaN if none did.
  double mean_tau = 0.0;
  double median_tau = 0.0;
  double q10_tau = 0.0;
  double q90_tau = 0.0;
  /// (# incorrect non-capped runs) / n_runs.
  double error_rate = 0.0;
  /// Quantiles of rel_dist_log10 at every trace time, ascending in t.
  std::vector<CheckpointQuantiles> checkpoints;
  /// Per-run records in run-index order.
  std::vector<RunRecord> runs;
};

/// Quantile with linear interpolation between order statistics
/// (position q (n - 1) in the sorted sample). NaN for an empty sample.
double quantile(std::vector<double> values, double q);

/// Aggregates records in the given order; pure function of its input.
BenchSummary summarize(std::vector<RunRecord> runs);

/// Runs n_runs independent trajectories with seeds config.seed ^ index on
/// `parallelism` threads (0 selects the hardware concurrency). The result is
/// independent of the thread count.
BenchSummary monte_carlo(const TabularMdp& mdp, const RunConfig& config, std::size_t n_runs,
                         std::size_t parallelism = 1);

struct VrqlInputs {
  double mu_min = 0.0;
  double t_mix = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double delta = 0.1;
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  double c1 = 10.0;
  double c2 = 10.0;
  double c3 = 10.0;
};

struct VrqlComplexity {
  double epochs = 0.0;   // M
  double t_epoch = 0.0;
  double n = 0.0;        // N
  double total = 0.0;    // M (N + t_epoch)
  VrqlInputs inputs;
};

/// Sample complexity of variance-reduced Q-learning (natural logarithms):
///   M       = c3 log(1 / (eps^2 (1-g)^2))
///   t_epoch = c2/mu (1/(1-g)^3 + t_mix/(1-g)) log(1/((1-g)^2 eps)) log(SA/delta)
///   N       = c1/mu (1/((1-g)^3 min(1, eps^2)) + t_mix) log(SA t_epoch/delta)
/// Throws DomainError on non-positive inputs or log arguments.
VrqlComplexity vrql_complexity(const VrqlInputs& inputs);

/// Instance-driven variant: uniform behaviour policy, mu_min = min_z w_u(z),
/// t_mix its 1/4-TV mixing time and eps = the minimum gap.
VrqlComplexity vrql_complexity(const TabularMdp& mdp, double delta, double c1 = 10.0,
                               double c2 = 10.0, double c3 = 10.0);

struct StarvationPoint {
  std::uint64_t k = 0;
  std::uint64_t hits = 0;  // runs with s_k = S
  double frequency = 0.0;
  double bound = 0.0;      // eps_{k-S+1}^{S-1}
  bool violated = false;
};

struct StarvationReport {
  std::size_t num_states = 0;
  double alpha = 0.0;
  std::uint64_t horizon = 0;
  std::size_t n_runs = 0;
  std::size_t reached = 0;
  double reach_fraction = 0.0;
  /// Times k >= S with at least one hit, in increasing order.
  std::vector<StarvationPoint> points;
  std::size_t violations = 0;
};

/// Chain on states 1..S started at 1: at step t it moves one state right
/// (staying at S) with probability eps_t = t^{-alpha} and otherwise resets to
/// state 1. A point counts as a violation of P(s_k = S) <= eps_{k-S+1}^{S-1}
/// only when its hit count is implausible under the bound at one-sided
/// level 1e-3 / horizon (Chernoff).
StarvationReport starvation_demo(std::size_t num_states, double alpha, std::uint64_t horizon,
                                 std::size_t n_runs, std::uint64_t seed);

/// Trace CSV `t,eps,min_visits,rel_dist_log10,statistic,threshold`, rows of
/// every record in order. Throws Error naming the path on I/O failure.
void export_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
/// Summary CSV `t,q10,q50,q90`.
void export_csv(const BenchSummary& summary, const std::filesystem::path& path);

}  // namespace mdpnas

#include "mdpnas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "mdpnas/chain.hpp"
#include "mdpnas/errors.hpp"
#include "mdpnas/planning.hpp"
#include "mdpnas/stopping.hpp"

namespace mdpnas {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool needs_m(ScheduleKind kind) { return kind != ScheduleKind::ergodic; }

struct Distances {
  double relative = kNaN;
  double absolute = kNaN;
};

Distances allocation_distance(std::span<const std::uint64_t> counts, std::uint64_t t,
                              std::span<const double> target) {
  Distances out;
  if (target.empty() || t == 0) return out;
  out.relative = 0.0;
  out.absolute = 0.0;
  const double total = static_cast<double>(t);
  for (std::size_t z = 0; z < counts.size(); ++z) {
    const double diff = std::abs(static_cast<double>(counts[z]) / total - target[z]);
    out.absolute = std::max(out.absolute, diff);
    out.relative = std::max(out.relative, diff / target[z]);
  }
  return out;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream file(path);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  return file;
}

void finish_output(std::ofstream& file, const std::filesystem::path& path) {
  file.flush();
  if (!file) throw Error("failed writing " + path.string());
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string("vrql_complexity: ") + name + " must be positive");
  }
}

double checked_log(double argument, const char* name) {
  if (!(argument > 0.0) || !std::isfinite(argument)) {
    throw DomainError(std::string("vrql_complexity: non-positive log argument in ") + name);
  }
  return std::log(argument);
}

}  // namespace

void validate(const RunConfig& config) {
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (config.max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (config.recompute_period < 1) throw ValidationError("recompute_period must be >= 1");
  if (config.trace_period < 1) throw ValidationError("trace_period must be >= 1");
  if (config.m && *config.m < 1) throw ValidationError("m must be >= 1");
}

BenchTarget bench_target(const TabularMdp& mdp, const SolverOptions& solver) {
  BenchTarget target;
  const ValueSolution solution = solve_optimal(mdp);
  target.optimal_policy = solution.optimal_policy;
  if (solution.unique_optimum) {
    const OracleAllocation oracle = solve_oracle_allocation(mdp, solution, solver);
    target.oracle_weights = oracle.allocation.weights;
    target.oracle_value = oracle.value;
  }
  try {
    target.m = connectivity_m(mdp);
  } catch (const ValidationError&) {
    target.m = 0;  // not communicating; only the ergodic schedule is usable
  }
  return target;
}

RunRecord run_once(const TabularMdp& mdp, const RunConfig& config) {
  return run_once(mdp, config, bench_target(mdp, config.solver));
}

RunRecord run_once(const TabularMdp& mdp, const RunConfig& config, const BenchTarget& target) {
  validate(config);
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  ExplorationSchedule schedule{config.schedule, 1};
  if (needs_m(config.schedule)) {
    schedule.m = config.m.value_or(target.m);
    if (schedule.m < 1) throw ValidationError("schedule needs m but the instance is not communicating");
  }

  NavigatorOptions options;
  options.mode = config.mode;
  options.recompute_period = config.recompute_period;
  options.solver = config.solver;
  NavigatorState state(S, A, mdp.gamma(), options);

  std::vector<std::uint64_t> checkpoints = config.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();

  StoppingRule rule(ThresholdConfig{config.delta, S, A});
  Rng rng(config.seed);
  RunRecord record;
  record.seed = config.seed;
  StoppingDecision decision;

  auto decide = [&](std::uint64_t t) {
    const auto& counts = state.counts();
    const bool all_visited = std::none_of(counts.begin(), counts.end(), [](auto n) { return n == 0; });
    if (all_visited) {
      try {
        decision = rule.decide(state.empirical(), counts, t);
        return;
      } catch (const Error&) {
      }
    }
    // Some pair unvisited (U infinite) or the empirical solve failed.
    decision = StoppingDecision{};
    decision.threshold = rule.threshold(counts);
  };

  bool stopped = false;
  for (std::uint64_t step = 0; step < config.max_steps; ++step) {
    state.advance(mdp, schedule, rng);
    const std::uint64_t t = state.t();
    bool fresh = false;
    if (config.stopping) {
      decide(t);
      fresh = true;
    }

    bool trace_now = t % config.trace_period == 0;
    while (next_checkpoint != checkpoints.end() && *next_checkpoint <= t) {
      if (*next_checkpoint == t) trace_now = true;
      ++next_checkpoint;
    }
    if (trace_now) {
      if (!fresh) decide(t);
      const auto& counts = state.counts();
      TraceRow row;
      row.t = t;
      row.eps = exploration_rate(t, schedule);
      row.min_visits = *std::min_element(counts.begin(), counts.end());
      row.rel_dist_log10 = std::log10(allocation_distance(counts, t, target.oracle_weights).relative);
      row.statistic = decision.statistic;
      row.threshold = decision.threshold;
      record.trace.push_back(row);
    }

    if (config.stopping && decision.stop) {
      stopped = true;
      break;
    }
  }

  record.tau = state.t();
  record.hit_cap = !stopped;
  if (stopped) {
    record.answered_policy = decision.empirical_policy;
  } else {
    try {
      record.answered_policy = solve_optimal(state.empirical(), kDefaultSolveTolerance, rule.warm_start()).optimal_policy;
    } catch (const Error&) {
      record.answered_policy.clear();
    }
  }
  record.correct = record.answered_policy == target.optimal_policy;
  const Distances final = allocation_distance(state.counts(), record.tau, target.oracle_weights);
  record.final_rel_dist = final.relative;
  record.final_abs_dist = final.absolute;
  record.skipped_recomputes = state.skipped_recomputes();
  return record;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, values.size() - 1);
  const double frac = position - static_cast<double>(lower);
  return values[lower] + frac * (values[upper] - values[lower]);
}

BenchSummary summarize(std::vector<RunRecord> runs) {
  BenchSummary summary;
  summary.n_runs = runs.size();
  std::vector<double> taus;
  std::size_t errors = 0;
  std::map<std::uint64_t, std::vector<double>> by_time;
  for (const RunRecord& run : runs) {
    if (run.hit_cap) {
      ++summary.n_capped;
    } else {
      taus.push_back(static_cast<double>(run.tau));
      if (!run.correct) ++errors;
    }
    for (const TraceRow& row : run.trace) by_time[row.t].push_back(row.rel_dist_log10);
  }
  if (taus.empty()) {
    summary.mean_tau = kNaN;
  } else {
    double total = 0.0;
    for (double tau : taus) total += tau;
    summary.mean_tau = total / static_cast<double>(taus.size());
  }
  summary.median_tau = quantile(taus, 0.5);
  summary.q10_tau = quantile(taus, 0.1);
  summary.q90_tau = quantile(taus, 0.9);
  summary.error_rate = runs.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(runs.size());
  for (auto& [t, values] : by_time) {
    CheckpointQuantiles row;
    row.t = t;
    row.n = values.size();
    row.q10 = quantile(values, 0.1);
    row.q50 = quantile(values, 0.5);
    row.q90 = quantile(values, 0.9);
    summary.checkpoints.push_back(row);
  }
  summary.runs = std::move(runs);
  return summary;
}

BenchSummary monte_carlo(const TabularMdp& mdp, const RunConfig& config, std::size_t n_runs,
                         std::size_t parallelism) {
  validate(config);
  if (n_runs < 1) throw ValidationError("n_runs must be >= 1");
  const BenchTarget target = bench_target(mdp, config.solver);
  if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
  parallelism = std::min(parallelism, n_runs);

  std::vector<RunRecord> records(n_runs);
  std::vector<std::exception_ptr> failures(n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      RunConfig run_config = config;
      run_config.seed = config.seed ^ static_cast<std::uint64_t>(i);
      try {
        records[i] = run_once(mdp, run_config, target);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < parallelism; ++k) threads.emplace_back(worker);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return summarize(std::move(records));
}

VrqlComplexity vrql_complexity(const VrqlInputs& in) {
  require_positive(in.mu_min, "mu_min");
  require_positive(in.t_mix, "t_mix");
  require_positive(in.epsilon, "epsilon");
  require_positive(in.delta, "delta");
  require_positive(in.c1, "c1");
  require_positive(in.c2, "c2");
  require_positive(in.c3, "c3");
  if (!(in.gamma >= 0.0 && in.gamma < 1.0)) throw DomainError("vrql_complexity: gamma must lie in [0, 1)");
  if (in.num_states < 1 || in.num_actions < 1) throw DomainError("vrql_complexity: S and A must be >= 1");

  const double g = 1.0 - in.gamma;
  const double eps = in.epsilon;
  const double pairs = static_cast<double>(in.num_states * in.num_actions);

  VrqlComplexity out;
  out.inputs = in;
  out.epochs = in.c3 * checked_log(1.0 / (eps * eps * g * g), "M");
  out.t_epoch = in.c2 / in.mu_min * (1.0 / (g * g * g) + in.t_mix / g) *
                checked_log(1.0 / (g * g * eps), "t_epoch") * checked_log(pairs / in.delta, "t_epoch");
  out.n = in.c1 / in.mu_min * (1.0 / (g * g * g * std::min(1.0, eps * eps)) + in.t_mix) *
          checked_log(pairs * out.t_epoch / in.delta, "N");
  out.total = out.epochs * (out.n + out.t_epoch);
  return out;
}

VrqlComplexity vrql_complexity(const TabularMdp& mdp, double delta, double c1, double c2, double c3) {
  const ErgodicityReport report = ergodicity_report(mdp);
  const ValueSolution solution = solve_optimal(mdp);
  if (!std::isfinite(solution.min_gap) || !(solution.min_gap > 0.0)) {
    throw DomainError("vrql_complexity: the instance needs a positive finite minimum gap");
  }
  VrqlInputs in;
  in.mu_min = report.omega_u.minCoeff();
  in.t_mix = static_cast<double>(report.t_mix);
  in.gamma = mdp.gamma();
  in.epsilon = solution.min_gap;
  in.delta = delta;
  in.num_states = mdp.num_states();
  in.num_actions = mdp.num_actions();
  in.c1 = c1;
  in.c2 = c2;
  in.c3 = c3;
  return vrql_complexity(in);
}

StarvationReport starvation_demo(std::size_t num_states, double alpha, std::uint64_t horizon,
                                 std::size_t n_runs, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw DomainError("starvation_demo: alpha must be positive");
  if (num_states < 2) throw DomainError("starvation_demo: needs at least 2 states");
  if (horizon < 1 || n_runs < 1) throw DomainError("starvation_demo: horizon and n_runs must be >= 1");

  StarvationReport report;
  report.num_states = num_states;
  report.alpha = alpha;
  report.horizon = horizon;
  report.n_runs = n_runs;

  // eps_t for t = 1..horizon; index 0 unused.
  std::vector<double> eps(horizon + 1, 1.0);
  for (std::uint64_t t = 1; t <= horizon; ++t) eps[t] = std::pow(static_cast<double>(t), -alpha);

  // hits[k]: runs with s_k = S, k = 1..horizon.
  std::vector<std::uint64_t> hits(horizon + 1, 0);
  for (std::size_t run = 0; run < n_runs; ++run) {
    Rng rng(seed ^ static_cast<std::uint64_t>(run));
    std::size_t s = 1;
    bool reached = false;
    for (std::uint64_t k = 1; k <= horizon; ++k) {
      if (s == num_states) {
        ++hits[k];
        reached = true;
      }
      if (k == horizon) break;
      s = uniform01(rng) < eps[k] ? std::min(s + 1, num_states) : 1;
    }
    if (reached) ++report.reached;
  }
  report.reach_fraction = static_cast<double>(report.reached) / static_cast<double>(n_runs);

  const double n = static_cast<double>(n_runs);
  const double level = std::log(1e3 * static_cast<double>(horizon));
  const double power = static_cast<double>(num_states - 1);
  for (std::uint64_t k = num_states; k <= horizon; ++k) {
    if (hits[k] == 0) continue;
    StarvationPoint point;
    point.k = k;
    point.hits = hits[k];
    point.frequency = static_cast<double>(hits[k]) / n;
    point.bound = std::pow(eps[k - num_states + 1], power);
    point.violated = point.bound < 1.0 && point.frequency > point.bound &&
                     n * kl_bernoulli(point.frequency, point.bound) > level;
    if (point.violated) ++report.violations;
    report.points.push_back(point);
  }
  return report;
}

void export_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream file = open_output(path);
  file << "t,eps,min_visits,rel_dist_log10,statistic,threshold\n";
  for (const RunRecord& record : records) {
    for (const TraceRow& row : record.trace) {
      file << row.t << ',' << format_double(row.eps) << ',' << row.min_visits << ','
           << format_double(row.rel_dist_log10) << ',' << format_double(row.statistic) << ','
           << format_double(row.threshold) << '\n';
    }
  }
  finish_output(file, path);
}

void export_csv(const BenchSummary& summary, const std::filesystem::path& path) {
  std::ofstream file = open_output(path);
  file << "t,q10,q50,q90\n";
  for (const CheckpointQuantiles& row : summary.checkpoints) {
    file << row.t << ',' << format_double(row.q10) << ',' << format_double(row.q50) << ','
         << format_double(row.q90) << '\n';
  }
  finish_output(file, path);
}

}  // namespace mdpnas

// mdpnas: command-line front end for instance generation, solving, chain
// diagnostics, single runs, Monte-Carlo campaigns, the VRQL calculator and
// the starvation demo.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "mdpnas/allocation.hpp"
#include "mdpnas/bench.hpp"
#include "mdpnas/chain.hpp"
#include "mdpnas/errors.hpp"
#include "mdpnas/instances.hpp"
#include "mdpnas/planning.hpp"

namespace fs = std::filesystem;
using namespace mdpnas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.10g", v);
  return buffer;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
  std::ofstream file(path);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file << doc.dump(2) << '\n';
  if (!file) throw Error("failed writing " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
  return path;
}

struct RunFlags {
  std::string instance;
  double delta = 0.1;
  std::string mode = "d";
  std::string schedule = "ergodic";
  std::optional<std::size_t> m;
  std::uint64_t seed = 0;
  std::uint64_t recompute_period = 1000;
  std::uint64_t trace_period = 10'000;
  std::uint64_t max_steps = 100'000'000;
  bool no_stop = false;
  std::string out;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--instance", flags.instance, "Instance file (JSON)")->required();
  cmd->add_option("--delta", flags.delta, "Confidence level");
  cmd->add_option("--mode", flags.mode, "Navigation rule")->check(CLI::IsMember({"c", "d"}));
  cmd->add_option("--schedule", flags.schedule, "Exploration schedule")
      ->check(CLI::IsMember({"ergodic", "comm", "theorem"}));
  cmd->add_option("--m", flags.m, "Connectivity parameter (default: computed)");
  cmd->add_option("--seed", flags.seed, "Random seed");
  cmd->add_option("--recompute-period", flags.recompute_period, "Steps between oracle recomputes");
  cmd->add_option("--trace-period", flags.trace_period, "Steps between trace rows");
  cmd->add_option("--max-steps", flags.max_steps, "Safety cap on the number of steps");
  cmd->add_flag("--no-stop", flags.no_stop, "Ignore the stopping rule and run max-steps steps");
  cmd->add_option("--out", flags.out, "Output directory for CSV files");
}

RunConfig to_config(const RunFlags& flags) {
  RunConfig config;
  config.mode = flags.mode == "c" ? NavigationMode::cesaro : NavigationMode::direct;
  config.schedule = flags.schedule == "ergodic" ? ScheduleKind::ergodic
                    : flags.schedule == "comm"  ? ScheduleKind::communicating
                                                : ScheduleKind::theorem;
  config.m = flags.m;
  config.delta = flags.delta;
  config.seed = flags.seed;
  config.recompute_period = flags.recompute_period;
  config.trace_period = flags.trace_period;
  config.max_steps = flags.max_steps;
  config.stopping = !flags.no_stop;
  validate(config);
  return config;
}

void print_run(const RunRecord& record) {
  std::cout << "seed=" << record.seed << '\n'
            << "tau=" << record.tau << '\n'
            << "hit_cap=" << (record.hit_cap ? "true" : "false") << '\n'
            << "answered_policy=" << join(record.answered_policy) << '\n'
            << "correct=" << (record.correct ? "true" : "false") << '\n'
            << "final_rel_dist=" << fmt(record.final_rel_dist) << '\n'
            << "final_abs_dist=" << fmt(record.final_abs_dist) << '\n'
            << "skipped_recomputes=" << record.skipped_recomputes << '\n';
}

int cmd_gen(const std::string& kind, std::size_t states, std::size_t actions, double gamma,
            std::uint64_t seed, const std::string& out) {
  InstanceMetadata meta;
  meta.name = kind;
  std::optional<TabularMdp> mdp;
  if (kind == "ergodic") {
    mdp = gen_random_ergodic(states, actions, gamma, seed);
    meta.seed = seed;
  } else if (kind == "riverswim") {
    mdp = river_swim(states, gamma);
  } else {
    mdp = counterexample_river_swim(states, gamma);
  }
  if (out.empty()) {
    std::cout << instance_to_json(*mdp, meta);
  } else {
    save_instance(*mdp, out, meta);
    std::cout << "wrote " << out << '\n';
  }
  return kExitOk;
}

int cmd_solve(const std::string& instance, const std::string& dump) {
  const TabularMdp mdp = load_instance(instance);
  const ValueSolution solution = solve_optimal(mdp);
  std::cout << "optimal_policy=" << join(solution.optimal_policy) << '\n'
            << "optimal_value=" << join(solution.optimal_value) << '\n'
            << "min_gap=" << fmt(solution.min_gap) << '\n'
            << "span=" << fmt(solution.span) << '\n'
            << "unique_optimum=" << (solution.unique_optimum ? "true" : "false") << '\n';
  if (!solution.unique_optimum) throw UniquenessError("the optimal policy is not unique; no oracle allocation");
  const HardnessProfile profile = hardness_profile(solution, mdp.gamma());
  const OracleAllocation oracle = solve_oracle_allocation(mdp, solution);
  const StochasticPolicy policy = oracle_policy(oracle.allocation.weights, mdp.num_states(), mdp.num_actions());
  std::cout << "hardness=" << join(profile.hardness) << '\n'
            << "t3=" << fmt(profile.t3) << '\n'
            << "t4=" << fmt(profile.t4) << '\n'
            << "h_star=" << fmt(profile.h_star) << '\n'
            << "U_o=" << fmt(oracle.value) << '\n'
            << "omega_star=" << join(oracle.allocation.weights) << '\n'
            << "feasibility_residual=" << fmt(oracle.allocation.feasibility_residual) << '\n'
            << "oracle_policy=" << join(policy.probabilities()) << '\n'
            << "iterations=" << oracle.iterations << '\n';
  if (!dump.empty()) {
    nlohmann::json doc;
    doc["S"] = mdp.num_states();
    doc["A"] = mdp.num_actions();
    doc["U_o"] = oracle.value;
    doc["omega_star"] = oracle.allocation.weights;
    doc["feasibility_residual"] = oracle.allocation.feasibility_residual;
    doc["oracle_policy"] = policy.probabilities();
    doc["optimal_policy"] = solution.optimal_policy;
    doc["hardness"] = profile.hardness;
    doc["h_star"] = profile.h_star;
    doc["t3"] = profile.t3;
    doc["t4"] = profile.t4;
    write_json(doc, dump);
  }
  return kExitOk;
}

int cmd_chain(const std::string& instance, const std::string& dump) {
  const TabularMdp mdp = load_instance(instance);
  const ErgodicityReport report = ergodicity_report(mdp);
  const StateActionChain chain =
      state_action_kernel(mdp, StochasticPolicy::uniform(mdp.num_states(), mdp.num_actions()));
  const double kappa = condition_number(chain, report.omega_u);
  std::vector<double> omega(report.omega_u.data(), report.omega_u.data() + report.omega_u.size());
  std::cout << "S=" << report.num_states << '\n'
            << "A=" << report.num_actions << '\n'
            << "m=" << report.m << '\n'
            << "m_with_self_pairs=" << report.m_with_self_pairs << '\n'
            << "m_differs_with_self_pairs=" << (report.m != report.m_with_self_pairs ? "true" : "false") << '\n'
            << "r=" << report.r << '\n'
            << "sigma_u=" << fmt(report.sigma_u) << '\n'
            << "eta1=" << fmt(report.eta1) << '\n'
            << "eta2=" << fmt(report.eta2) << '\n'
            << "eta=" << fmt(report.eta) << '\n'
            << "t_mix=" << report.t_mix << '\n'
            << "aperiodic_uniform=" << (report.aperiodic_uniform ? "true" : "false") << '\n'
            << "kappa=" << fmt(kappa) << '\n'
            << "omega_u=" << join(omega) << '\n';
  if (!dump.empty()) {
    nlohmann::json doc;
    doc["S"] = report.num_states;
    doc["A"] = report.num_actions;
    doc["m"] = report.m;
    doc["m_with_self_pairs"] = report.m_with_self_pairs;
    doc["r"] = report.r;
    doc["sigma_u"] = report.sigma_u;
    doc["eta1"] = report.eta1;
    doc["eta2"] = report.eta2;
    doc["eta"] = report.eta;
    doc["t_mix"] = report.t_mix;
    doc["aperiodic_uniform"] = report.aperiodic_uniform;
    doc["kappa"] = kappa;
    doc["omega_u"] = omega;
    write_json(doc, dump);
  }
  return kExitOk;
}

int cmd_run(const RunFlags& flags) {
  const TabularMdp mdp = load_instance(flags.instance);
  const RunRecord record = run_once(mdp, to_config(flags));
  print_run(record);
  if (!flags.out.empty()) {
    const fs::path dir = ensure_dir(flags.out);
    export_csv(std::span<const RunRecord>(&record, 1), dir / "trace.csv");
    std::cout << "trace=" << (dir / "trace.csv").string() << '\n';
  }
  return kExitOk;
}

int cmd_bench(const RunFlags& flags, std::size_t runs, std::size_t jobs) {
  const TabularMdp mdp = load_instance(flags.instance);
  const BenchSummary summary = monte_carlo(mdp, to_config(flags), runs, jobs);
  std::cout << "n_runs=" << summary.n_runs << '\n'
            << "n_capped=" << summary.n_capped << '\n'
            << "mean_tau=" << fmt(summary.mean_tau) << '\n'
            << "median_tau=" << fmt(summary.median_tau) << '\n'
            << "q10_tau=" << fmt(summary.q10_tau) << '\n'
            << "q90_tau=" << fmt(summary.q90_tau) << '\n'
            << "error_rate=" << fmt(summary.error_rate) << '\n';
  if (!flags.out.empty()) {
    const fs::path dir = ensure_dir(flags.out);
    export_csv(summary.runs, dir / "trace.csv");
    export_csv(summary, dir / "summary.csv");
    std::ofstream file(dir / "runs.csv");
    file << "run,seed,tau,hit_cap,correct,final_rel_dist\n";
    for (std::size_t i = 0; i < summary.runs.size(); ++i) {
      const RunRecord& r = summary.runs[i];
      file << i << ',' << r.seed << ',' << r.tau << ',' << r.hit_cap << ',' << r.correct << ','
           << fmt(r.final_rel_dist) << '\n';
    }
    if (!file) throw Error("failed writing " + (dir / "runs.csv").string());
    std::cout << "out=" << dir.string() << '\n';
  }
  return kExitOk;
}

void print_vrql(const VrqlComplexity& v) {
  std::cout << "mu_min=" << fmt(v.inputs.mu_min) << '\n'
            << "t_mix=" << fmt(v.inputs.t_mix) << '\n'
            << "epsilon=" << fmt(v.inputs.epsilon) << '\n'
            << "M=" << fmt(v.epochs) << '\n'
            << "t_epoch=" << fmt(v.t_epoch) << '\n'
            << "N=" << fmt(v.n) << '\n'
            << "total=" << fmt(v.total) << '\n'
            << "log_base=e\n"
            << "t_mix_definition=tv_quarter\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDP-NaS best-policy identification toolkit"};
  app.require_subcommand(1);

  std::string kind = "ergodic";
  std::size_t states = 5;
  std::size_t actions = 5;
  double gamma = 0.7;
  std::uint64_t seed = 0;
  std::string out;
  auto* gen = app.add_subcommand("gen", "Generate an instance file");
  gen->add_option("--kind", kind, "Instance family")->check(CLI::IsMember({"ergodic", "riverswim", "counterexample"}));
  gen->add_option("--states", states, "Number of states");
  gen->add_option("--actions", actions, "Number of actions (ergodic only)");
  gen->add_option("--gamma", gamma, "Discount factor");
  gen->add_option("--seed", seed, "Random seed (ergodic only)");
  gen->add_option("--out", out, "Output file (default: stdout)");

  std::string instance;
  std::string dump;
  auto* solve = app.add_subcommand("solve", "Solve the oracle allocation of an instance");
  solve->add_option("--instance", instance, "Instance file")->required();
  solve->add_option("--dump", dump, "Write the allocation as JSON");

  auto* chain = app.add_subcommand("chain", "Chain diagnostics of the uniform policy");
  chain->add_option("--instance", instance, "Instance file")->required();
  chain->add_option("--dump", dump, "Write the report as JSON");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "One best-policy-identification run");
  add_run_flags(run, run_flags);

  RunFlags bench_flags;
  std::size_t runs = 30;
  std::size_t jobs = 0;
  auto* bench = app.add_subcommand("bench", "Monte-Carlo campaign");
  add_run_flags(bench, bench_flags);
  bench->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  bench->add_option("--jobs", jobs, "Worker threads (0: hardware concurrency)");

  VrqlInputs vrql_in;
  std::string vrql_instance;
  auto* vrql = app.add_subcommand("vrql", "VRQL sample-complexity formula");
  vrql->add_option("--instance", vrql_instance, "Derive mu_min, t_mix and epsilon from an instance");
  vrql->add_option("--mu-min", vrql_in.mu_min, "Minimum state-action occupancy");
  vrql->add_option("--t-mix", vrql_in.t_mix, "Mixing time");
  vrql->add_option("--gamma", vrql_in.gamma, "Discount factor");
  vrql->add_option("--epsilon", vrql_in.epsilon, "Accuracy");
  vrql->add_option("--delta", vrql_in.delta, "Confidence level");
  vrql->add_option("--states", vrql_in.num_states, "S");
  vrql->add_option("--actions", vrql_in.num_actions, "A");
  vrql->add_option("--c1", vrql_in.c1, "Constant c1");
  vrql->add_option("--c2", vrql_in.c2, "Constant c2");
  vrql->add_option("--c3", vrql_in.c3, "Constant c3");

  std::size_t starve_states = 6;
  double alpha = 1.0;
  std::uint64_t horizon = 100'000;
  std::size_t starve_runs = 200;
  std::uint64_t starve_seed = 0;
  std::string starve_out;
  auto* starve = app.add_subcommand("starve", "Exploration-starvation demonstration");
  starve->add_option("--states", starve_states, "Chain length S");
  starve->add_option("--alpha", alpha, "Exploration exponent: eps_t = t^-alpha");
  starve->add_option("--horizon", horizon, "Steps per trajectory");
  starve->add_option("--runs", starve_runs, "Number of trajectories");
  starve->add_option("--seed", starve_seed, "Random seed");
  starve->add_option("--out", starve_out, "Output directory for the bound-check CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) return cmd_gen(kind, states, actions, gamma, seed, out);
    if (*solve) return cmd_solve(instance, dump);
    if (*chain) return cmd_chain(instance, dump);
    if (*run) return cmd_run(run_flags);
    if (*bench) return cmd_bench(bench_flags, runs, jobs);
    if (*vrql) {
      const VrqlComplexity v = vrql_instance.empty()
                                   ? vrql_complexity(vrql_in)
                                   : vrql_complexity(load_instance(vrql_instance), vrql_in.delta,
                                                     vrql_in.c1, vrql_in.c2, vrql_in.c3);
      print_vrql(v);
      return kExitOk;
    }
    if (*starve) {
      const StarvationReport report = starvation_demo(starve_states, alpha, horizon, starve_runs, starve_seed);
      std::cout << "S=" << report.num_states << '\n'
                << "alpha=" << fmt(report.alpha) << '\n'
                << "horizon=" << report.horizon << '\n'
                << "n_runs=" << report.n_runs << '\n'
                << "reached=" << report.reached << '\n'
                << "reach_fraction=" << fmt(report.reach_fraction) << '\n'
                << "bound_points=" << report.points.size() << '\n'
                << "bound_violations=" << report.violations << '\n';
      if (!starve_out.empty()) {
        const fs::path dir = ensure_dir(starve_out);
        std::ofstream file(dir / "starvation.csv");
        file << "k,hits,frequency,bound,violated\n";
        for (const StarvationPoint& p : report.points) {
          file << p.k << ',' << p.hits << ',' << fmt(p.frequency) << ',' << fmt(p.bound) << ','
               << (p.violated ? 1 : 0) << '\n';
        }
        if (!file) throw Error("failed writing " + (dir / "starvation.csv").string());
      }
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

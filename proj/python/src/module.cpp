#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mdpnas/allocation.hpp"
#include "mdpnas/bench.hpp"
#include "mdpnas/chain.hpp"
#include "mdpnas/errors.hpp"
#include "mdpnas/instances.hpp"
#include "mdpnas/navigation.hpp"
#include "mdpnas/planning.hpp"
#include "mdpnas/stopping.hpp"
#include "mdpnas/tabular_mdp.hpp"

namespace py = pybind11;
using namespace mdpnas;

namespace {

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

StochasticPolicy policy_from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t S = rows.size();
  const std::size_t A = S == 0 ? 0 : rows.front().size();
  std::vector<double> flat;
  flat.reserve(S * A);
  for (const auto& row : rows) {
    if (row.size() != A) throw ValidationError("policy rows must all have the same length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return StochasticPolicy(S, A, std::move(flat));
}

std::vector<std::vector<double>> policy_rows(const StochasticPolicy& policy) {
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < policy.num_states(); ++s) {
    const auto row = policy.row(s);
    rows.emplace_back(row.begin(), row.end());
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_mdpnas, m) {
  m.doc() = "Best-policy identification in tabular MDPs by navigation and stopping.";

  // ValidationError and DomainError derive from ValueError so callers can
  // catch bad input uniformly; ConvergenceError is a RuntimeError.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<UniquenessError>(m, "UniquenessError", domain.ptr());
  (void)validation;

  py::class_<TabularMdp>(m, "TabularMdp")
      .def(py::init<std::size_t, std::size_t, double, std::vector<double>, std::vector<double>>(),
           py::arg("num_states"), py::arg("num_actions"), py::arg("gamma"), py::arg("transitions"),
           py::arg("reward_means"),
           "Transitions are flat, indexed (s * A + a) * S + s'; rewards are indexed s * A + a.")
      .def_property_readonly("num_states", &TabularMdp::num_states)
      .def_property_readonly("num_actions", &TabularMdp::num_actions)
      .def_property_readonly("gamma", &TabularMdp::gamma)
      .def_property_readonly("transitions", &TabularMdp::transitions)
      .def_property_readonly("reward_means", &TabularMdp::reward_means)
      .def("transition", &TabularMdp::transition, py::arg("s"), py::arg("a"), py::arg("next"))
      .def("reward", &TabularMdp::reward, py::arg("s"), py::arg("a"))
      .def("to_json", [](const TabularMdp& mdp) { return instance_to_json(mdp); })
      .def(py::self == py::self)
      .def("__repr__", [](const TabularMdp& mdp) {
        return "TabularMdp(S=" + std::to_string(mdp.num_states()) + ", A=" +
               std::to_string(mdp.num_actions()) + ", gamma=" + std::to_string(mdp.gamma()) + ")";
      });

  py::class_<ValueSolution>(m, "ValueSolution")
      .def_readonly("optimal_value", &ValueSolution::optimal_value)
      .def_readonly("optimal_q", &ValueSolution::optimal_q)
      .def_readonly("optimal_policy", &ValueSolution::optimal_policy)
      .def_readonly("gaps", &ValueSolution::gaps)
      .def_readonly("min_gap", &ValueSolution::min_gap)
      .def_readonly("span", &ValueSolution::span)
      .def_readonly("value_variance", &ValueSolution::value_variance)
      .def_readonly("unique_optimum", &ValueSolution::unique_optimum);

  m.def("solve_optimal", [](const TabularMdp& mdp, double tol) { return solve_optimal(mdp, tol); },
        py::arg("mdp"), py::arg("tol") = kDefaultSolveTolerance);
  m.def(
      "policy_value",
      [](const TabularMdp& mdp, const std::vector<std::vector<double>>& policy) {
        return policy_value(mdp, policy_from_rows(policy));
      },
      py::arg("mdp"), py::arg("policy"));

  py::class_<Connectivity>(m, "Connectivity")
      .def_readonly("m", &Connectivity::m)
      .def_readonly("m_with_self_pairs", &Connectivity::m_with_self_pairs);
  m.def("connectivity", &connectivity, py::arg("mdp"));

  py::class_<ErgodicityReport>(m, "ErgodicityReport")
      .def_readonly("m", &ErgodicityReport::m)
      .def_readonly("r", &ErgodicityReport::r)
      .def_readonly("sigma_u", &ErgodicityReport::sigma_u)
      .def_readonly("eta", &ErgodicityReport::eta)
      .def_readonly("omega_u", &ErgodicityReport::omega_u)
      .def_readonly("t_mix", &ErgodicityReport::t_mix)
      .def_readonly("aperiodic_uniform", &ErgodicityReport::aperiodic_uniform);
  m.def("ergodicity_report", [](const TabularMdp& mdp) { return ergodicity_report(mdp); },
        py::arg("mdp"));
  m.def(
      "stationary_distribution",
      [](const TabularMdp& mdp, const std::vector<std::vector<double>>& policy) {
        return stationary_distribution(state_action_kernel(mdp, policy_from_rows(policy)));
      },
      py::arg("mdp"), py::arg("policy"), "Stationary distribution of the state-action chain.");

  py::class_<HardnessProfile>(m, "HardnessProfile")
      .def_readonly("hardness", &HardnessProfile::hardness)
      .def_readonly("optimal_policy", &HardnessProfile::optimal_policy)
      .def_readonly("h_star", &HardnessProfile::h_star);
  m.def("hardness_profile", [](const TabularMdp& mdp) {
        return hardness_profile(solve_optimal(mdp), mdp.gamma());
      },
      py::arg("mdp"));
  m.def(
      "upper_bound_U",
      [](const HardnessProfile& profile, const std::vector<double>& omega) {
        return upper_bound_U(profile, as_span(omega));
      },
      py::arg("profile"), py::arg("omega"));
  m.def(
      "navigation_residual",
      [](const TabularMdp& mdp, const std::vector<double>& omega) {
        return max_navigation_residual(mdp, as_span(omega));
      },
      py::arg("mdp"), py::arg("omega"));

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("max_iters", &SolverOptions::max_iters)
      .def_readwrite("step_scale", &SolverOptions::step_scale)
      .def_readwrite("projection_tol", &SolverOptions::projection_tol)
      .def_readwrite("projection_max_sweeps", &SolverOptions::projection_max_sweeps)
      .def_readwrite("stall_tolerance", &SolverOptions::stall_tolerance)
      .def_readwrite("stall_window", &SolverOptions::stall_window);

  py::class_<OracleAllocation>(m, "OracleAllocation")
      .def_property_readonly("weights", [](const OracleAllocation& o) { return o.allocation.weights; })
      .def_property_readonly("feasibility_residual",
                             [](const OracleAllocation& o) { return o.allocation.feasibility_residual; })
      .def_readonly("value", &OracleAllocation::value)
      .def_readonly("iterations", &OracleAllocation::iterations);
  m.def(
      "solve_oracle_allocation",
      [](const TabularMdp& mdp, const SolverOptions& options) {
        return solve_oracle_allocation(mdp, solve_optimal(mdp), options);
      },
      py::arg("mdp"), py::arg("options") = SolverOptions{});
  m.def(
      "oracle_policy",
      [](const TabularMdp& mdp, const std::vector<double>& omega) {
        return policy_rows(oracle_policy(as_span(omega), mdp.num_states(), mdp.num_actions()));
      },
      py::arg("mdp"), py::arg("omega"));

  m.def("kl_bernoulli", &kl_bernoulli, py::arg("p"), py::arg("q"));
  m.def("h_inverse", &h_inverse, py::arg("y"));
  m.def("varphi", &varphi, py::arg("x"));
  py::class_<ThresholdConfig>(m, "ThresholdConfig")
      .def(py::init([](double delta, std::size_t S, std::size_t A) { return ThresholdConfig{delta, S, A}; }),
           py::arg("delta"), py::arg("num_states"), py::arg("num_actions"))
      .def_readwrite("delta", &ThresholdConfig::delta)
      .def_readwrite("num_states", &ThresholdConfig::num_states)
      .def_readwrite("num_actions", &ThresholdConfig::num_actions);
  m.def(
      "beta_transitions",
      [](const std::vector<std::uint64_t>& counts, const ThresholdConfig& config) {
        return beta_transitions({counts.data(), counts.size()}, config);
      },
      py::arg("counts"), py::arg("config"));
  m.def(
      "beta_rewards",
      [](const std::vector<std::uint64_t>& counts, const ThresholdConfig& config) {
        return beta_rewards({counts.data(), counts.size()}, config);
      },
      py::arg("counts"), py::arg("config"));

  m.def("gen_random_ergodic", &gen_random_ergodic, py::arg("num_states"), py::arg("num_actions"),
        py::arg("gamma"), py::arg("seed"));
  m.def("river_swim", &river_swim, py::arg("num_states"), py::arg("gamma"));
  m.def("counterexample_river_swim", &counterexample_river_swim, py::arg("num_states"), py::arg("gamma"));
  m.def("load_instance", [](const std::filesystem::path& path) { return load_instance(path); },
        py::arg("path"));
  m.def("instance_from_json", [](const std::string& text) { return instance_from_json(text); },
        py::arg("text"));

  py::enum_<NavigationMode>(m, "NavigationMode")
      .value("cesaro", NavigationMode::cesaro)
      .value("direct", NavigationMode::direct);
  py::enum_<ScheduleKind>(m, "ScheduleKind")
      .value("ergodic", ScheduleKind::ergodic)
      .value("communicating", ScheduleKind::communicating)
      .value("theorem", ScheduleKind::theorem);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("mode", &RunConfig::mode)
      .def_readwrite("schedule", &RunConfig::schedule)
      .def_readwrite("m", &RunConfig::m)
      .def_readwrite("delta", &RunConfig::delta)
      .def_readwrite("recompute_period", &RunConfig::recompute_period)
      .def_readwrite("trace_period", &RunConfig::trace_period)
      .def_readwrite("max_steps", &RunConfig::max_steps)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("stopping", &RunConfig::stopping)
      .def_readwrite("checkpoints", &RunConfig::checkpoints)
      .def_readwrite("solver", &RunConfig::solver);

  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("t", &TraceRow::t)
      .def_readonly("eps", &TraceRow::eps)
      .def_readonly("min_visits", &TraceRow::min_visits)
      .def_readonly("rel_dist_log10", &TraceRow::rel_dist_log10)
      .def_readonly("statistic", &TraceRow::statistic)
      .def_readonly("threshold", &TraceRow::threshold);
  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("seed", &RunRecord::seed)
      .def_readonly("tau", &RunRecord::tau)
      .def_readonly("answered_policy", &RunRecord::answered_policy)
      .def_readonly("correct", &RunRecord::correct)
      .def_readonly("hit_cap", &RunRecord::hit_cap)
      .def_readonly("final_rel_dist", &RunRecord::final_rel_dist)
      .def_readonly("trace", &RunRecord::trace);
  py::class_<CheckpointQuantiles>(m, "CheckpointQuantiles")
      .def_readonly("t", &CheckpointQuantiles::t)
      .def_readonly("n", &CheckpointQuantiles::n)
      .def_readonly("q10", &CheckpointQuantiles::q10)
      .def_readonly("q50", &CheckpointQuantiles::q50)
      .def_readonly("q90", &CheckpointQuantiles::q90);
  py::class_<BenchSummary>(m, "BenchSummary")
      .def_readonly("n_runs", &BenchSummary::n_runs)
      .def_readonly("n_capped", &BenchSummary::n_capped)
      .def_readonly("mean_tau", &BenchSummary::mean_tau)
      .def_readonly("median_tau", &BenchSummary::median_tau)
      .def_readonly("q10_tau", &BenchSummary::q10_tau)
      .def_readonly("q90_tau", &BenchSummary::q90_tau)
      .def_readonly("error_rate", &BenchSummary::error_rate)
      .def_readonly("checkpoints", &BenchSummary::checkpoints)
      .def_readonly("runs", &BenchSummary::runs);

  // Long runs release the GIL; they touch no Python state.
  m.def(
      "run_once",
      [](const TabularMdp& mdp, const RunConfig& config) {
        py::gil_scoped_release release;
        return run_once(mdp, config);
      },
      py::arg("mdp"), py::arg("config"));
  m.def(
      "monte_carlo",
      [](const TabularMdp& mdp, const RunConfig& config, std::size_t n_runs, std::size_t parallelism) {
        py::gil_scoped_release release;
        return monte_carlo(mdp, config, n_runs, parallelism);
      },
      py::arg("mdp"), py::arg("config"), py::arg("n_runs"), py::arg("parallelism") = 1);

  py::class_<VrqlComplexity>(m, "VrqlComplexity")
      .def_readonly("epochs", &VrqlComplexity::epochs)
      .def_readonly("t_epoch", &VrqlComplexity::t_epoch)
      .def_readonly("n", &VrqlComplexity::n)
      .def_readonly("total", &VrqlComplexity::total);
  m.def(
      "vrql_complexity",
      [](double mu_min, double t_mix, double gamma, double epsilon, double delta, std::size_t S,
         std::size_t A) {
        VrqlInputs in;
        in.mu_min = mu_min;
        in.t_mix = t_mix;
        in.gamma = gamma;
        in.epsilon = epsilon;
        in.delta = delta;
        in.num_states = S;
        in.num_actions = A;
        return vrql_complexity(in);
      },
      py::arg("mu_min"), py::arg("t_mix"), py::arg("gamma"), py::arg("epsilon"), py::arg("delta"),
      py::arg("num_states"), py::arg("num_actions"));
  m.def(
      "vrql_complexity_for",
      [](const TabularMdp& mdp, double delta) { return vrql_complexity(mdp, delta); }, py::arg("mdp"),
      py::arg("delta"));

  py::class_<StarvationReport>(m, "StarvationReport")
      .def_readonly("reached", &StarvationReport::reached)
      .def_readonly("reach_fraction", &StarvationReport::reach_fraction)
      .def_readonly("violations", &StarvationReport::violations);
  m.def("starvation_demo", &starvation_demo, py::arg("num_states"), py::arg("alpha"), py::arg("horizon"),
        py::arg("n_runs"), py::arg("seed"));
}

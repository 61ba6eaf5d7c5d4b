#include "commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "liveclock/config.hpp"
#include "liveclock/engine.hpp"
#include "liveclock/ring.hpp"

namespace liveclock::cli {

namespace {

int cmd_solve(const RingGeometry& g, std::ostream& out, std::ostream& err) {
  PropagationSolution sol;
  try {
    sol = solve_propagation(g);
  } catch (const NoSolutionError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kNoSolution;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  }
  const double from_forward = omega_from_forward_time(g.n, g.r, g.c, sol.forward);
  const double from_backward = omega_from_backward_time(g.n, g.r, g.c, sol.backward);
  fmt::print(out, "t_plus {:.12g}\n", sol.forward);
  fmt::print(out, "t_minus {:.12g}\n", sol.backward);
  fmt::print(out, "ratio {:.12g}\n", sol.backward / sol.forward);
  fmt::print(out, "omega_r_over_c {:.12g}\n", g.omega * g.r / g.c);
  fmt::print(out, "omega_from_t_plus {:.12g}\n", from_forward);
  fmt::print(out, "omega_from_t_minus {:.12g}\n", from_backward);
  fmt::print(out, "residual_t_plus {:.12g}\n", std::abs(from_forward - g.omega));
  fmt::print(out, "residual_t_minus {:.12g}\n", std::abs(from_backward - g.omega));
  return kOk;
}

int cmd_curve(int n, int samples, const std::string& path, std::ostream& out, std::ostream& err) {
  std::vector<RatioSample> curve;
  try {
    curve = ratio_curve(n, samples);
  } catch (const NoSolutionError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kNoSolution;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  }
  if (path.empty() || path == "-") {
    write_ratio_csv(out, curve);
    return kOk;
  }
  std::ofstream file(path);
  if (!file) {
    fmt::print(err, "error: cannot write {}\n", path);
    return kIoError;
  }
  write_ratio_csv(file, curve);
  file.close();
  if (!file) {
    fmt::print(err, "error: failed writing {}\n", path);
    return kIoError;
  }
  return kOk;
}

int cmd_feasible(double t_forward, double t_backward, std::int64_t max_n, double tol,
                 std::ostream& out, std::ostream& err) {
  std::vector<FeasiblePeriods> rows;
  try {
    rows = feasible_two_way_periods(t_forward, t_backward, max_n, tol);
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  }
  fmt::print(out, "# n_plus n_minus period residual\n");
  std::size_t printed = 0;
  for (const auto& row : rows) {
    // Re-check by substitution before printing.
    const double residual = std::abs(t_forward / static_cast<double>(row.forward_hops) -
                                     t_backward / static_cast<double>(row.backward_hops));
    if (residual > tol) continue;
    fmt::print(out, "{} {} {:.12g} {:.12g}\n", row.forward_hops, row.backward_hops, row.period,
               residual);
    ++printed;
  }
  if (printed == 0) {
    fmt::print(out, "# no period serves both directions within tolerance {:.12g}\n", tol);
  }
  return kOk;
}

std::optional<ScenarioConfig> load(const std::string& path, std::ostream& err, int& code) {
  try {
    return load_config(path);
  } catch (const ConfigIoError& e) {
    fmt::print(err, "error: {}\n", e.what());
    code = kIoError;
  } catch (const ConfigError& e) {
    fmt::print(err, "config error at {}\n", e.what());
    code = kConfigError;
  }
  return std::nullopt;
}

int cmd_simulate(const std::string& config_path, const std::string& trace_path, std::ostream& out,
                 std::ostream& err) {
  int code = kOk;
  const auto cfg = load(config_path, err, code);
  if (!cfg) return code;
  Trace trace;
  try {
    trace = run_scenario(cfg->scenario);
  } catch (const std::exception& e) {
    fmt::print(err, "simulation error: {}\n", e.what());
    return kConfigError;
  }
  if (!trace_path.empty()) {
    std::ofstream file(trace_path);
    if (!file) {
      fmt::print(err, "error: cannot write {}\n", trace_path);
      return kIoError;
    }
    write_trace_csv(file, trace);
    file.close();
    if (!file) {
      fmt::print(err, "error: failed writing {}\n", trace_path);
      return kIoError;
    }
  }
  const TraceSummary sum = summarize(trace);
  fmt::print(out, "max_phase {:.12g} drops {} revisions {} final_phase {:.12g} receptions {}\n",
             sum.max_phase, sum.drops, sum.revisions, sum.final_phase, sum.receptions);
  return kOk;
}

int cmd_estimate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  int code = kOk;
  const auto cfg = load(config_path, err, code);
  if (!cfg) return code;
  const Scenario& s = cfg->scenario;
  if (!s.geometry || static_cast<std::size_t>(s.geometry->n) != s.nodes.size()) {
    fmt::print(err, "config error at geometry: estimation needs one node per polygon vertex\n");
    return kConfigError;
  }
  const RingGeometry& g = *s.geometry;
  const NodeId origin = cfg->estimate.origin;
  Trace trace;
  try {
    trace = run_scenario(s);
  } catch (const std::exception& e) {
    fmt::print(err, "simulation error: {}\n", e.what());
    return kConfigError;
  }

  const auto n = static_cast<std::uint32_t>(s.nodes.size());
  const NodeId ahead = node((index_of(origin) + 1) % n);
  const NodeId behind = node((index_of(origin) + n - 1) % n);
  std::optional<CircuitEcho> forward;
  std::optional<CircuitEcho> backward;
  for (const auto& rec : measure_echoes(trace, origin)) {
    if (rec.hops != static_cast<int>(n)) continue;
    const CircuitEcho echo{echo_count(rec), rec.turnaround};
    if (rec.peer == ahead && !forward) forward = echo;
    if (rec.peer == behind && !backward) backward = echo;
  }
  if (!forward || !backward) {
    fmt::print(err, "estimation failed: no complete {} circuit echo reached node {}\n",
               forward ? "backward" : "forward", index_of(origin));
    return kEstimationFailed;
  }

  const double period = s.nodes[index_of(origin)].clock.effective_period();
  double estimate = 0.0;
  try {
    estimate = estimate_omega(*forward, *backward, period, g.n, g.r, g.c,
                              cfg->estimate.tolerance);
  } catch (const EstimationFailed& e) {
    fmt::print(err, "{}\n", e.what());
    fmt::print(out, "omega_forward {:.12g}\nomega_backward {:.12g}\n", e.from_forward,
               e.from_backward);
    return kEstimationFailed;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "estimation failed: {}\n", e.what());
    return kEstimationFailed;
  }
  fmt::print(out, "omega_estimate {:.12g}\n", estimate);
  fmt::print(out, "omega_configured {:.12g}\n", g.omega);
  if (g.omega != 0.0) {
    fmt::print(out, "relative_error {:.12g}\n", std::abs(estimate - g.omega) / std::abs(g.omega));
  } else {
    fmt::print(out, "absolute_error {:.12g}\n", std::abs(estimate));
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Live-clock network simulator and ring-geometry toolkit"};
  app.require_subcommand(1);

  RingGeometry geometry;
  auto* solve = app.add_subcommand("solve", "Forward/backward propagation times on a rotating ring");
  solve->add_option("--n", geometry.n, "Polygon sides (>= 3)")->required();
  solve->add_option("--r", geometry.r, "Radius, m")->required();
  solve->add_option("--omega", geometry.omega, "Angular rate, rad/s")->required();
  solve->add_option("--c", geometry.c, "Signal speed, m/s")->capture_default_str();

  int curve_n = 6;
  int samples = 101;
  std::string curve_out;
  auto* curve = app.add_subcommand("curve", "Backward/forward ratio sweep as CSV");
  curve->add_option("--n", curve_n, "Polygon sides (>= 3)")->capture_default_str();
  curve->add_option("--samples", samples, "Number of rows (>= 2)")->capture_default_str();
  curve->add_option("--out", curve_out, "Output file (stdout when omitted)");

  double t_forward = 0.0;
  double t_backward = 0.0;
  std::int64_t max_n = 10000;
  double tol = 0.0;
  auto* feasible = app.add_subcommand("feasible", "Common periods for two-way zero-phase rings");
  feasible->add_option("--tplus", t_forward, "Forward hop time, s")->required();
  feasible->add_option("--tminus", t_backward, "Backward hop time, s")->required();
  feasible->add_option("--max-n", max_n, "Largest hop count")->capture_default_str();
  feasible->add_option("--tol", tol, "Allowed |T+/N+ - T-/N-|, s")->capture_default_str();

  std::string config_path;
  std::string trace_out;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and summarise its trace");
  simulate->add_option("config", config_path, "Scenario config file")->required();
  simulate->add_option("--out", trace_out, "Trace CSV output file");

  auto* estimate = app.add_subcommand("estimate", "Estimate ring rotation from probe circuits");
  estimate->add_option("config", config_path, "Scenario config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (*solve) return cmd_solve(geometry, out, err);
  if (*curve) return cmd_curve(curve_n, samples, curve_out, out, err);
  if (*feasible) return cmd_feasible(t_forward, t_backward, max_n, tol, out, err);
  if (*simulate) return cmd_simulate(config_path, trace_out, out, err);
  if (*estimate) return cmd_estimate(config_path, out, err);
  return kUsage;
}

}  // namespace liveclock::cli

#pragma once

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>

#include "logflow/config.hpp"
#include "logflow/critical.hpp"
#include "logflow/curvature.hpp"
#include "logflow/flow.hpp"
#include "logflow/io.hpp"
#include "logflow/soliton.hpp"

namespace logflow {

struct CommandResult {
  json manifest;
  int exit_code = 0;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// The hash ignores output_dir, so relocated re-runs share it.
inline json manifest_head(const ExperimentConfig& c, const std::string& command) {
  json hashed = c.source;
  hashed.erase("output_dir");
  return {{"tool", "logflow"},
          {"tool_version", kToolVersion},
          {"command", command},
          {"config_hash", fnv1a_hex(hashed.dump())},
          {"config", c.source}};
}

inline CommandResult finish(OutputSet& out, json manifest, const Stopwatch& clock, const std::string& status,
                            int exit_code) {
  manifest["status"] = status;
  manifest["files"] = out.listing();
  manifest["timings"] = {{"total_seconds", clock.seconds()}};
  out.write("manifest.json", "manifest", manifest.dump(2) + "\n");
  out.commit();
  return {manifest, exit_code};
}

inline void write_run_outputs(OutputSet& out, const FlowTrajectory& traj, const RunConfig& cfg) {
  const MonitorSummary monitors = monitor_report(traj, cfg.monitors);
  out.write("timeseries.csv", "time-series", timeseries_csv(traj));
  out.write("summary.json", "run-summary", to_json(traj, monitors).dump(2) + "\n");
  out.write("monitors.json", "monitor-report", to_json(monitors).dump(2) + "\n");
  const char* ext = traj.fields.empty() || traj.fields.front().dim() == 1 ? ".csv" : ".obj";
  for (std::size_t i = 0; i < traj.fields.size(); ++i) {
    if (i % std::size_t(cfg.snapshot_stride) != 0 && i + 1 != traj.fields.size()) continue;
    std::ostringstream name;
    name << "snapshots/snapshot_" << std::setw(5) << std::setfill('0') << i << ext;
    out.write(name.str(), "snapshot", snapshot_text(traj.fields[i]));
  }
}

}  // namespace detail

/// Evolves the configured initial body and writes the time series, run
/// summary, monitor report and snapshots.
inline CommandResult cmd_run(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  const SupportField initial = make_initial(c);
  const FlowOperator op(make_curvature(c), make_speed(c));
  OutputSet out(c.output_dir);
  json manifest = detail::manifest_head(c, "run");
  try {
    const FlowTrajectory traj = run(initial, op, c.flow);
    detail::write_run_outputs(out, traj, c.flow);
    manifest["outcome"] = to_string(traj.outcome.kind);
    return detail::finish(out, manifest, clock, "ok", 0);
  } catch (const RunFailure& e) {
    detail::write_run_outputs(out, e.partial(), c.flow);
    manifest["error"] = e.what();
    return detail::finish(out, manifest, clock, "failed", 3);
  }
}

/// Brackets the critical leaf of the configured foliation.
inline CommandResult cmd_critical(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  const Foliation fol = make_foliation(c);
  const FlowOperator op(make_curvature(c), make_speed(c));
  const CriticalBracket b = find_critical(fol, op, c.flow, c.critical_tolerance, c.critical_budget);
  OutputSet out(c.output_dir);
  out.write("bracket.json", "bracket-report", to_json(b).dump(2) + "\n");
  out.write("probes.csv", "probe-outcomes", probes_csv(b));
  out.write("sweep.log", "sweep-log", b.sweep_log);
  json manifest = detail::manifest_head(c, "critical");
  manifest["theta_minus"] = b.theta_minus;
  manifest["theta_plus"] = b.theta_plus;
  return detail::finish(out, manifest, clock, "ok", 0);
}

/// Translator speed for F = K from the moment condition. With an initial
/// body, also the residual of that body against xi under both sign
/// conventions; the one that closes identifies the convention.
inline CommandResult cmd_soliton_speed(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  const PrescribedSpeed speed = make_speed(c);
  const GaussSpeedSolution sol = gauss_translator_speed(speed, c.soliton_sign, {}, c.dimension == 2 ? c.resolution : 24);
  // The opposite convention names the same translator by -xi.
  const Eigen::VectorXd corollary_xi = -sol.xi;
  json report{{"xi", to_json(sol.xi)},
              {"sign_convention", c.soliton_sign},
              {"moment_norm", sol.gradient_norm},
              {"potential", sol.potential},
              {"iterations", sol.iterations},
              {"corollary_xi", to_json(corollary_xi)},
              {"residual", nullptr},
              {"corollary_residual", nullptr},
              {"window", nullptr}};
  if (c.initial) {
    const SupportField body = make_initial(c);
    report["residual"] = translator_residual_gauss(body, sol.xi, speed, c.soliton_sign);
    report["corollary_residual"] = translator_residual_gauss(body, sol.xi, speed, -c.soliton_sign);
  }
  OutputSet out(c.output_dir);
  out.write("soliton.json", "soliton-report", report.dump(2) + "\n");
  json manifest = detail::manifest_head(c, "soliton-speed");
  manifest["xi"] = to_json(sol.xi);
  return detail::finish(out, manifest, clock, "ok", 0);
}

/// Sampled check of the curvature function's structural assumptions.
inline CommandResult cmd_check_curvature(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  const AssumptionReport rep = verify_assumptions(make_curvature(c), c.check_samples, c.seed);
  OutputSet out(c.output_dir);
  out.write("assumptions.json", "assumption-report", to_json(rep).dump(2) + "\n");
  json manifest = detail::manifest_head(c, "check-curvature");
  manifest["pass"] = rep.pass();
  return detail::finish(out, manifest, clock, "ok", 0);
}

}  // namespace logflow

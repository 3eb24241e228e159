#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gdsim/io.hpp"

// Command implementations shared by the binary and the tests. Outputs are
// computed before anything is written, so a failing run leaves no partial
// output directory behind.
//
// Exit codes: 0 success, 2 config error, 3 solver/integrator failure,
// 4 feasibility failure.

namespace gdsim {
namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitFeasibility = 4;

namespace detail_cli {

inline std::optional<AppConfig> load_or_report(const std::string& config_path) {
  try {
    return load_config_file(config_path);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
}

inline void ensure_dir(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
}

}  // namespace detail_cli

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = detail_cli::load_or_report(config_path);
  if (!cfg) return kExitConfig;

  ProtocolResult result;
  try {
    result = run_protocol(cfg->resolved_scenario());
  } catch (const std::exception& e) {
    std::cerr << "simulate failed: " << e.what() << "\n";
    return kExitSolver;
  }

  namespace fs = std::filesystem;
  detail_cli::ensure_dir(out_dir);
  const fs::path dir(out_dir);
  io::write_json(dir / "report.json", io::report_json(result.report));
  if (cfg->outputs.write_trajectories) {
    io::write_file(dir / "trajectory_left.csv", io::trajectory_csv(result.left));
    io::write_file(dir / "trajectory_right.csv", io::trajectory_csv(result.right));
  }
  if (cfg->outputs.write_events) {
    io::write_file(dir / "events.csv", io::events_csv(result.left, result.right));
  }
  if (cfg->outputs.write_plot_data) {
    io::write_file(dir / "plot_superposition.csv",
                   io::superposition_csv(result.superposition));
    io::write_file(dir / "plot_trajectories.csv",
                   io::overlay_csv(result.left, result.right,
                                   cfg->integrator.output_dt()));
  }
  io::write_json(dir / "manifest.json",
                 io::run_manifest("simulate", config_path, out_dir, *cfg));
  return kExitOk;
}

inline int cmd_design(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = detail_cli::load_or_report(config_path);
  if (!cfg) return kExitConfig;

  json out;
  bool feasible = true;
  try {
    ScenarioConfig sc = cfg->resolved_scenario();
    const double i_split = sc.I_split ? *sc.I_split : design_splitting_current(sc);
    sc.I_split = i_split;
    const double i_side = sc.I_side ? *sc.I_side : solve_side_current(sc, sc.side_bracket);
    sc.I_side = i_side;

    // Verification run for the residual and the achieved clearances.
    const ProtocolResult verify = run_protocol(sc);
    const double v_in = analytics::incident_velocity(sc.constants, sc.z0);
    const double b = sc.delta_x0 / 2.0;
    const double rho_split =
        analytics::current_density(i_split, verify.report.closest_approach_split);
    const double rho_side =
        analytics::current_density(i_side, verify.report.closest_approach_side);
    const double rho_right_angle =
        analytics::current_density_right_angle(sc.constants, b, v_in);
    feasible = rho_split <= sc.max_current_density &&
               rho_side <= sc.max_current_density &&
               rho_right_angle <= sc.max_current_density;

    out["I_split"] = i_split;
    out["I_side"] = i_side;
    out["exit_angle_residual"] = verify.report.exit_angle_residual;
    out["closest_approach_split"] = verify.report.closest_approach_split;
    out["closest_approach_side"] = verify.report.closest_approach_side;
    out["current_density_split"] = rho_split;
    out["current_density_side"] = rho_side;
    out["current_density_right_angle"] = rho_right_angle;
    out["max_current_density"] = sc.max_current_density;
    out["feasible"] = feasible;
  } catch (const std::exception& e) {
    std::cerr << "design failed: " << e.what() << "\n";
    return kExitSolver;
  }

  namespace fs = std::filesystem;
  detail_cli::ensure_dir(out_dir);
  io::write_json(fs::path(out_dir) / "design.json", out);
  io::write_json(fs::path(out_dir) / "manifest.json",
                 io::run_manifest("design", config_path, out_dir, *cfg));
  if (!feasible) {
    std::cerr << "design infeasible: current density exceeds the configured bound\n";
    return kExitFeasibility;
  }
  return kExitOk;
}

inline int cmd_sensitivity(const std::string& config_path, const std::string& out_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::optional<int> samples_override = std::nullopt) {
  auto cfg = detail_cli::load_or_report(config_path);
  if (!cfg) return kExitConfig;
  if (seed_override) cfg->fluctuation.spec.seed = *seed_override;
  if (samples_override) cfg->fluctuation.spec.samples = *samples_override;
  try {
    cfg->fluctuation.spec.validate();
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  json stats_json, limits_json;
  std::string curve;
  try {
    const ScenarioConfig sc = cfg->resolved_scenario();
    const auto stats = sensitivity::monte_carlo_deviation(sc, cfg->fluctuation.spec);

    stats_json["samples"] = stats.samples;
    stats_json["seed"] = cfg->fluctuation.spec.seed;
    stats_json["relative_sigma"] = cfg->fluctuation.spec.relative_sigma;
    stats_json["mode"] = detail_config::mode_name(cfg->fluctuation.spec.mode);
    stats_json["mean"] = stats.mean;
    stats_json["sd"] = stats.sd;
    stats_json["offsets"] = stats.offsets;
    stats_json["deviations"] = stats.deviations;

    // Analytic limits for the requested segment lengths plus the actual
    // splitting-to-side-wire distance of this geometry.
    const double b = sc.delta_x0 / 2.0;
    const double L_geom = std::hypot(sc.x_spl, sc.resolved_z_side());
    std::vector<double> lengths = cfg->fluctuation.L_values;
    lengths.push_back(L_geom);
    limits_json["target_db2"] = cfg->fluctuation.target_db2;
    limits_json["rows"] = json::array();
    for (double L : lengths) {
      const sensitivity::SegmentedPath path{L, b,
                                            sensitivity::beta_coefficient(4.0),
                                            sensitivity::beta_coefficient(16.0)};
      limits_json["rows"].push_back(
          {{"L", L},
           {"current_limit", sensitivity::current_limit(cfg->fluctuation.target_db2, path)},
           {"geometry_derived", L == L_geom}});
    }

    curve = "L,delta_b2,dI_over_I\r\n";
    for (double L : cfg->fluctuation.L_values) {
      const sensitivity::SegmentedPath path{L, b,
                                            sensitivity::beta_coefficient(4.0),
                                            sensitivity::beta_coefficient(16.0)};
      for (int i = 0; i <= 60; ++i) {
        const double db2 = 1e-13 * std::pow(10.0, i / 12.0);  // 1e-13..1e-8 m
        curve += io::num(L) + "," + io::num(db2) + "," +
                 io::num(sensitivity::current_limit(db2, path)) + "\r\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "sensitivity failed: " << e.what() << "\n";
    return kExitSolver;
  }

  namespace fs = std::filesystem;
  detail_cli::ensure_dir(out_dir);
  io::write_json(fs::path(out_dir) / "statistics.json", stats_json);
  io::write_json(fs::path(out_dir) / "limits.json", limits_json);
  io::write_file(fs::path(out_dir) / "fluctuation_curve.csv", curve);
  io::write_json(fs::path(out_dir) / "manifest.json",
                 io::run_manifest("sensitivity", config_path, out_dir, *cfg));
  return kExitOk;
}

inline int cmd_analytics(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = detail_cli::load_or_report(config_path);
  if (!cfg) return kExitConfig;

  json out;
  std::string nv_curve;
  try {
    const ScenarioConfig sc = cfg->resolved_scenario();
    const PhysicalConstants& pc = sc.constants;
    const double b = sc.delta_x0 / 2.0;
    const double v_in = analytics::incident_velocity(pc, sc.z0);
    const double i_split = sc.I_split ? *sc.I_split : design_splitting_current(sc);
    const analytics::ScatteringInput first{i_split, b, v_in};
    const auto times = analytics::total_time(pc, sc.z0, sc.x_spl);

    out["alpha"] = alpha(pc);
    out["v_in"] = v_in;
    out["t1"] = times.t1;
    out["t2"] = times.t2;
    out["t3"] = times.t3;
    out["t_total"] = times.total;
    out["I_split"] = i_split;
    out["k"] = analytics::k_parameter(pc, first);
    out["theta_s"] = analytics::scattering_angle(pc, first);
    out["closest_approach_analytic"] = analytics::closest_approach_analytic(pc, first);
    out["current_density_eq_form"] = analytics::current_density_from_impact(pc, first);
    out["current_density_right_angle"] =
        analytics::current_density_right_angle(pc, b, v_in);

    if (cfg->nv) {
      const analytics::NVModel nv{cfg->nv->mass, cfg->nv->eta};
      json jn;
      jn["omega"] = analytics::nv_angular_frequency(pc, nv);
      const auto acc = analytics::nv_spin_acceleration(pc, nv);
      jn["spin_acceleration"] = {{"plus", acc.plus}, {"minus", acc.minus}};
      double max_sep = 0.0;
      const int n = 2000;
      nv_curve = "t,separation\r\n";
      for (int i = 0; i <= n; ++i) {
        const double t = cfg->nv->window * i / n;
        const double d = analytics::nv_initial_separation(pc, nv, t);
        max_sep = std::max(max_sep, std::abs(d));
        nv_curve += io::num(t) + "," + io::num(d) + "\r\n";
      }
      jn["max_separation"] = max_sep;
      jn["window"] = cfg->nv->window;
      out["nv"] = jn;
    }

    if (cfg->wavepacket) {
      const auto w = *cfg->wavepacket;
      const auto widths = analytics::trap_ground_widths(pc, w.mass, w.omega);
      const double kick = analytics::scattering_velocity_kick(pc, first);
      json jw;
      jw["dx0"] = w.dx0;
      jw["dx0_trap"] = widths.dx;
      jw["dp0_trap"] = widths.dp;
      jw["free_spread"] = analytics::free_spread_width(pc, w.dx0, w.mass, w.time);
      jw["time"] = w.time;
      jw["velocity_kick"] = kick;
      jw["min_width_after_scattering"] =
          analytics::min_width_after_scattering(pc, w.mass, kick);
      out["wavepacket"] = jw;
    }
  } catch (const std::exception& e) {
    std::cerr << "analytics failed: " << e.what() << "\n";
    return kExitSolver;
  }

  namespace fs = std::filesystem;
  detail_cli::ensure_dir(out_dir);
  io::write_json(fs::path(out_dir) / "analytics.json", out);
  if (!nv_curve.empty()) {
    io::write_file(fs::path(out_dir) / "nv_separation.csv", nv_curve);
  }
  io::write_json(fs::path(out_dir) / "manifest.json",
                 io::run_manifest("analytics", config_path, out_dir, *cfg));
  return kExitOk;
}

}  // namespace cli
}  // namespace gdsim

#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdsim/analytics.hpp"
#include "gdsim/dynamics.hpp"

// The two-stage experiment: release both branches from rest above the
// splitting wire, let gravity build the incident velocity, deflect each
// branch sideways at the splitting wire, then close the trajectories with a
// symmetric pair of side wires. Wire order in the environment is fixed:
// index 0 = splitting wire, 1 = left wire, 2 = right wire.

namespace gdsim {

struct ScenarioConfig {
  double z0 = 490e-6;        // release height above the splitting wire, m
  double delta_x0 = 1e-6;    // initial branch separation (= 2 b), m
  double x_spl = 491e-6;     // |x| of the side wires, m
  std::optional<double> z_side = -122.6e-6;  // absent -> placed on the ray
  std::optional<double> I_split;             // absent -> designed
  std::optional<double> I_side;              // absent -> solved
  double wire_radius = 0.0;
  bool gravity_on = true;
  FieldModel field_model = FieldModel::PerWireForceSum;
  std::pair<double, double> side_bracket{5.0, 20.0};  // amps
  double max_current_density = 1e13;                  // A/m^2 feasibility bound

  ParticleSpec particle{};
  PhysicalConstants constants{};
  IntegratorOptions integrator{};

  void validate() const {
    constants.validate();
    particle.validate();
    integrator.validate();
    if (!(z0 > 0.0)) throw config_error("scenario.z0 must be > 0");
    if (!(delta_x0 > 0.0)) throw config_error("scenario.delta_x0 must be > 0");
    if (!(x_spl > 0.0)) throw config_error("scenario.x_spl must be > 0");
    if (!(wire_radius >= 0.0)) throw config_error("scenario.wire_radius must be >= 0");
    if (!(side_bracket.first < side_bracket.second)) {
      throw config_error("scenario.side_bracket must be an increasing pair");
    }
    if (!(max_current_density > 0.0)) {
      throw config_error("scenario.max_current_density must be > 0");
    }
  }

  // Where the straight post-deflection ray from the splitting wire crosses
  // x = x_spl when falling under gravity: z = -x^2 / (4 z0).
  double designed_z_side() const { return -x_spl * x_spl / (4.0 * z0); }

  double resolved_z_side() const { return z_side ? *z_side : designed_z_side(); }

  FieldEnvironment environment(double i_split, double i_side) const {
    FieldEnvironment env;
    env.gravity_on = gravity_on;
    env.model = field_model;
    env.constants = constants;
    env.constants.chi_rho = particle.chi_rho;
    const double zs = resolved_z_side();
    env.wires = {Wire{{0.0, 0.0}, i_split, wire_radius},
                 Wire{{-x_spl, zs}, i_side, wire_radius},
                 Wire{{+x_spl, zs}, i_side, wire_radius}};
    return env;
  }
};

struct ScenarioReport {
  double max_superposition = 0.0;    // m
  double t_max_superposition = 0.0;  // s
  double total_time = 0.0;           // s
  double closest_approach_split = 0.0;
  double closest_approach_side = 0.0;
  double closure_residual = 0.0;     // branch separation at the terminal crossing
  double exit_angle_residual = 0.0;  // rad, worst branch
  double i_split = 0.0;
  double i_side = 0.0;
  bool i_split_designed = false;
  bool i_side_designed = false;
  double amplification = 0.0;
};

struct SuperpositionSample {
  double t = 0.0;
  double delta_x = 0.0;
};

struct ProtocolResult {
  Trajectory left;
  Trajectory right;
  ScenarioReport report;
  std::vector<SuperpositionSample> superposition;  // common output grid
};

/// Splitting-wire current for a right-angle first deflection of the incident
/// free-fall velocity at impact parameter delta_x0 / 2.
inline double design_splitting_current(const ScenarioConfig& cfg) {
  return analytics::current_for_angle(cfg.constants, std::numbers::pi / 2.0,
                                      cfg.delta_x0 / 2.0,
                                      analytics::incident_velocity(cfg.constants, cfg.z0));
}

namespace detail {

struct BranchRun {
  Trajectory traj;
  double t_second_scatter = 0.0;  // side-wire closest approach
  bool crossed_axis = false;
  double t_end = 0.0;
};

// One branch, both stages. Stage I ends at the closest approach to the
// branch's own side wire; stage II ends at the first x = 0 crossing (or
// max_time if the branch never returns, e.g. with the wires off).
inline BranchRun run_branch(const FieldEnvironment& env, const ScenarioConfig& cfg,
                            int side) {
  const int own_wire = side > 0 ? 2 : 1;
  TrajectoryState init{0.0, {side * cfg.delta_x0 / 2.0, cfg.z0}, {0.0, 0.0}};

  std::vector<EventSpec> stage1 = {EventSpec::closest_approach(0),
                                   EventSpec::closest_approach(1),
                                   EventSpec::closest_approach(2)};
  stage1[static_cast<std::size_t>(own_wire)].terminal = true;

  BranchRun out;
  out.traj = integrate(env, init, cfg.integrator, stage1);

  const Event* terminal = nullptr;
  for (const Event& ev : out.traj.events) {
    if (ev.terminal) terminal = &ev;
  }
  if (terminal == nullptr) {
    throw topology_error("branch never reached its side wire (no second scattering) "
                         "within max_time = " + std::to_string(cfg.integrator.max_time) + " s");
  }
  out.t_second_scatter = terminal->t;

  std::vector<EventSpec> stage2 = {EventSpec::closest_approach(0),
                                   EventSpec::closest_approach(1),
                                   EventSpec::closest_approach(2),
                                   EventSpec::plane_x(0.0, true, side > 0 ? -1 : +1)};
  Trajectory tail = integrate(env, terminal->state, cfg.integrator, stage2);

  for (const Event& ev : tail.events) {
    if (ev.kind == EventKind::PlaneCrossingX && ev.terminal) out.crossed_axis = true;
    out.traj.events.push_back(ev);
  }
  // The tail starts at the stage-I terminal state; skip the duplicate.
  for (std::size_t i = 1; i < tail.states.size(); ++i) {
    out.traj.states.push_back(tail.states[i]);
  }
  out.t_end = out.traj.states.back().t;
  return out;
}

// Asymptotic exit angle relative to the horizontal, with gravity's impulse
// since the second scattering removed. Measured at the end state, where the
// diamagnetic force is long negligible.
inline double exit_angle_residual(const FieldEnvironment& env, const BranchRun& br,
                                  int side) {
  const TrajectoryState& end = br.traj.states.back();
  const double g = env.gravity_on ? env.constants.g : 0.0;
  const double vz_comp = end.vel.z + g * (end.t - br.t_second_scatter);
  const double vx_ref = side > 0 ? -end.vel.x : end.vel.x;
  return std::atan2(vz_comp, vx_ref);
}

}  // namespace detail

/// Root-solve the side-wire current so that both branches leave their second
/// scattering parallel to the x axis (|exit angle| < 1e-4 rad). The residual
/// is monotone enough for bisection over a sign-changing bracket.
inline double solve_side_current(const ScenarioConfig& cfg,
                                 std::pair<double, double> bracket) {
  cfg.validate();
  const double i_split =
      cfg.I_split ? *cfg.I_split : design_splitting_current(cfg);

  auto residual = [&](double i_side) {
    const FieldEnvironment env = cfg.environment(i_split, i_side);
    const auto br = detail::run_branch(env, cfg, +1);
    return detail::exit_angle_residual(env, br, +1);
  };

  constexpr double kAngleTol = 1e-4;
  double a = bracket.first, b = bracket.second;
  double fa = residual(a);
  if (std::abs(fa) < kAngleTol) return a;
  double fb = residual(b);
  if (std::abs(fb) < kAngleTol) return b;
  if (fa * fb > 0.0) {
    throw convergence_error("side-current bracket [" + std::to_string(a) + ", " +
                            std::to_string(b) + "] A does not straddle a root: f(a) = " +
                            std::to_string(fa) + ", f(b) = " + std::to_string(fb) + " rad");
  }

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    const double fm = residual(mid);
    if (std::abs(fm) < kAngleTol) return mid;
    if (fa * fm < 0.0) {
      b = mid;
      fb = fm;
    } else {
      a = mid;
      fa = fm;
    }
    if (b - a < 1e-12 * std::max(1.0, std::abs(b))) break;
  }
  throw convergence_error("side-current solve did not reach the angle tolerance");
}

/// Simulate both branches with all three wires energized and assemble the
/// report. Currents left unset in the config are designed/solved first.
inline ProtocolResult run_protocol(const ScenarioConfig& cfg) {
  cfg.validate();

  ScenarioReport rep;
  rep.i_split_designed = !cfg.I_split.has_value();
  rep.i_split = cfg.I_split ? *cfg.I_split : design_splitting_current(cfg);
  rep.i_side_designed = !cfg.I_side.has_value();
  rep.i_side = cfg.I_side ? *cfg.I_side : solve_side_current(cfg, cfg.side_bracket);

  const FieldEnvironment env = cfg.environment(rep.i_split, rep.i_side);

  auto right_future = std::async(std::launch::async, [&] {
    return detail::run_branch(env, cfg, +1);
  });
  detail::BranchRun left = detail::run_branch(env, cfg, -1);
  detail::BranchRun right = right_future.get();

  rep.total_time = 0.5 * (left.t_end + right.t_end);
  rep.closure_residual = norm(right.traj.states.back().pos - left.traj.states.back().pos);
  rep.exit_angle_residual =
      std::max(std::abs(detail::exit_angle_residual(env, left, -1)),
               std::abs(detail::exit_angle_residual(env, right, +1)));
  rep.closest_approach_split = std::min(closest_approach(left.traj, 0),
                                        closest_approach(right.traj, 0));
  rep.closest_approach_side = std::min(closest_approach(left.traj, 1),
                                       closest_approach(right.traj, 2));

  // Branch separation on the shared output grid. Both integrations emit at
  // integer multiples of the same spacing, so grid samples pair up exactly.
  ProtocolResult out;
  const double dt = cfg.integrator.output_dt();
  auto grid_index = [dt](double t) -> std::int64_t {
    const double kd = t / dt;
    const std::int64_t k = std::llround(kd);
    return std::abs(t - static_cast<double>(k) * dt) <= 1e-9 * dt ? k : -1;
  };
  std::vector<std::pair<std::int64_t, const TrajectoryState*>> lg, rg;
  for (const auto& s : left.traj.states) {
    if (const std::int64_t k = grid_index(s.t); k >= 0) lg.emplace_back(k, &s);
  }
  for (const auto& s : right.traj.states) {
    if (const std::int64_t k = grid_index(s.t); k >= 0) rg.emplace_back(k, &s);
  }
  std::size_t i = 0, j = 0;
  while (i < lg.size() && j < rg.size()) {
    if (lg[i].first < rg[j].first) {
      ++i;
    } else if (rg[j].first < lg[i].first) {
      ++j;
    } else {
      out.superposition.push_back(
          {lg[i].second->t, rg[j].second->pos.x - lg[i].second->pos.x});
      ++i;
      ++j;
    }
  }

  std::size_t imax = 0;
  for (std::size_t n = 1; n < out.superposition.size(); ++n) {
    if (out.superposition[n].delta_x > out.superposition[imax].delta_x) imax = n;
  }
  rep.max_superposition = out.superposition.empty() ? 0.0 : out.superposition[imax].delta_x;
  rep.t_max_superposition = out.superposition.empty() ? 0.0 : out.superposition[imax].t;
  if (imax > 0 && imax + 1 < out.superposition.size()) {
    // Parabolic vertex through the three samples around the grid maximum.
    const auto& p0 = out.superposition[imax - 1];
    const auto& p1 = out.superposition[imax];
    const auto& p2 = out.superposition[imax + 1];
    const double denom = p0.delta_x - 2.0 * p1.delta_x + p2.delta_x;
    if (denom < 0.0) {
      const double s = 0.5 * (p0.delta_x - p2.delta_x) / denom;
      if (std::abs(s) < 1.0) {
        rep.t_max_superposition = p1.t + s * dt;
        rep.max_superposition =
            p1.delta_x - 0.25 * (p0.delta_x - p2.delta_x) * s;
      }
    }
  }
  rep.amplification = rep.max_superposition / cfg.delta_x0;

  out.left = std::move(left.traj);
  out.right = std::move(right.traj);
  out.report = rep;
  return out;
}

/// Ratio of the achieved superposition to the initial splitting.
inline double amplification_factor(const ScenarioReport& rep, const ScenarioConfig& cfg) {
  return rep.max_superposition / cfg.delta_x0;
}

}  // namespace gdsim

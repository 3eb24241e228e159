#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gdsim/protocol.hpp"

using namespace gdsim;
using Catch::Approx;

namespace {

ScenarioConfig reference_config() {
  ScenarioConfig cfg;  // defaults are the reference geometry
  cfg.I_split = 6.04138;
  cfg.I_side = 10.0;
  return cfg;
}

}  // namespace

TEST_CASE("splitting-current design") {
  ScenarioConfig cfg;
  CHECK(design_splitting_current(cfg) == Approx(6.04138).epsilon(1e-3));

  // v_in doubles with 4x the height; the current is linear in v_in.
  ScenarioConfig c4 = cfg;
  c4.z0 = 4.0 * cfg.z0;
  CHECK(design_splitting_current(c4) ==
        Approx(2.0 * design_splitting_current(cfg)).epsilon(1e-12));

  // And linear in the impact parameter.
  ScenarioConfig c2 = cfg;
  c2.delta_x0 = 2.0 * cfg.delta_x0;
  CHECK(design_splitting_current(c2) ==
        Approx(2.0 * design_splitting_current(cfg)).epsilon(1e-12));
}

TEST_CASE("reference scenario reproduces the reference metrics") {
  const auto res = run_protocol(reference_config());
  const auto& r = res.report;
  CHECK(r.total_time == Approx(0.0194958).epsilon(5e-3));
  CHECK(r.max_superposition == Approx(980e-6).epsilon(0.02));
  CHECK(r.closest_approach_split == Approx(1.00081e-6).epsilon(0.02));
  // The refined minimum distance to the side wires on this trajectory; the
  // coarser sampled figure quoted alongside the geometry is 1.32289e-6.
  CHECK(r.closest_approach_side == Approx(1.29479e-6).epsilon(1e-3));
  CHECK(r.closure_residual < 1e-10);
  CHECK(r.amplification == Approx(980.0).epsilon(0.02));
  CHECK(amplification_factor(r, reference_config()) == Approx(r.amplification));
}

TEST_CASE("with the wires off both branches fall in parallel") {
  ScenarioConfig cfg = reference_config();
  cfg.I_split = 0.0;
  cfg.I_side = 0.0;
  cfg.integrator.max_time = 0.02;
  const auto res = run_protocol(cfg);
  REQUIRE(res.superposition.size() > 100);
  for (const auto& p : res.superposition) {
    CHECK(p.delta_x == Approx(cfg.delta_x0).margin(1e-15));
  }
  CHECK(res.report.max_superposition == Approx(cfg.delta_x0).margin(1e-15));
  CHECK(amplification_factor(res.report, cfg) == Approx(1.0).margin(1e-9));
}

TEST_CASE("branch trajectories are mirror antisymmetric") {
  const auto res = run_protocol(reference_config());
  for (const Trajectory* tr : {&res.left, &res.right}) {
    for (std::size_t i = 1; i < tr->states.size(); ++i) {
      REQUIRE(tr->states[i].t > tr->states[i - 1].t);
    }
  }
  REQUIRE(res.left.states.size() == res.right.states.size());
  for (std::size_t i = 0; i < res.left.states.size(); i += 7) {
    const auto& l = res.left.states[i];
    const auto& r = res.right.states[i];
    CHECK(l.t == r.t);
    CHECK(l.pos.x == Approx(-r.pos.x).margin(1e-10));
    CHECK(l.pos.z == Approx(r.pos.z).margin(1e-10));
  }
}

TEST_CASE("report metrics are mass independent end to end") {
  ScenarioConfig light = reference_config();
  light.particle.mass = 1e-17;
  ScenarioConfig heavy = reference_config();
  heavy.particle.mass = 1e-14;
  const auto a = run_protocol(light).report;
  const auto b = run_protocol(heavy).report;
  CHECK(a.total_time == Approx(b.total_time).epsilon(1e-12));
  CHECK(a.max_superposition == Approx(b.max_superposition).epsilon(1e-12));
  CHECK(a.closest_approach_split == Approx(b.closest_approach_split).epsilon(1e-12));
  CHECK(a.closest_approach_side == Approx(b.closest_approach_side).epsilon(1e-12));
}

TEST_CASE("first deflection is a right angle between asymptotes") {
  const ScenarioConfig cfg = reference_config();
  const auto res = run_protocol(cfg);
  for (const Trajectory* tr : {&res.left, &res.right}) {
    double t_ca = -1.0;
    for (const auto& ev : tr->events) {
      if (ev.kind == EventKind::ClosestApproach && ev.wire_index == 0) {
        t_ca = ev.t;
        break;
      }
    }
    REQUIRE(t_ca > 0.0);
    // Sample ~20 um before and after the encounter; remove gravity's impulse
    // relative to the apse so the pure deflection remains.
    const double dt_meas = 2e-4;
    const TrajectoryState* before = nullptr;
    const TrajectoryState* after = nullptr;
    for (const auto& s : tr->states) {
      if (s.t <= t_ca - dt_meas) before = &s;
      if (s.t >= t_ca + dt_meas) {
        after = &s;
        break;
      }
    }
    REQUIRE(before != nullptr);
    REQUIRE(after != nullptr);
    const double g = cfg.constants.g;
    const Vec2 vin{before->vel.x, before->vel.z - g * (t_ca - before->t)};
    const Vec2 vout{after->vel.x, after->vel.z + g * (after->t - t_ca)};
    const double deflection = std::atan2(std::abs(cross(vin, vout)), dot(vin, vout));
    CHECK(deflection == Approx(std::numbers::pi / 2).margin(2e-3));
  }
}

TEST_CASE("side-current solve reaches a small exit angle") {
  ScenarioConfig cfg;
  cfg.I_split = 6.04138;
  const double solved = solve_side_current(cfg, {5.0, 20.0});
  CHECK(solved > 8.5);
  CHECK(solved < 10.5);

  // Independent verification run at the solved current.
  ScenarioConfig check = cfg;
  check.I_side = solved;
  const auto res = run_protocol(check);
  CHECK(res.report.exit_angle_residual < 1e-4);

  // The nominal round 10 A current leaves only a small residual.
  ScenarioConfig nominal = cfg;
  nominal.I_side = 10.0;
  CHECK(run_protocol(nominal).report.exit_angle_residual < 0.05);
}

TEST_CASE("solve is symmetric between branches") {
  // Mirror symmetry of the layout makes the left-branch residual equal the
  // right-branch one, so the solved current is branch independent; verify via
  // the report, which folds both branches in.
  ScenarioConfig cfg;
  cfg.I_split = 6.04138;
  cfg.I_side = solve_side_current(cfg, {5.0, 20.0});
  const auto res = run_protocol(cfg);
  CHECK(res.report.exit_angle_residual < 1e-4);  // max over both branches
}

TEST_CASE("solver reports a useless bracket") {
  ScenarioConfig cfg;
  cfg.I_split = 6.04138;
  CHECK_THROWS_AS(solve_side_current(cfg, {11.0, 20.0}), convergence_error);
}

TEST_CASE("a too-short run that never reaches the side wire is a topology error") {
  ScenarioConfig cfg = reference_config();
  cfg.integrator.max_time = 0.005;
  CHECK_THROWS_AS(run_protocol(cfg), topology_error);
}

TEST_CASE("larger side-wire lever arm grows the superposition") {
  double prev = 0.0;
  for (double x : {420e-6, 491e-6, 560e-6}) {
    ScenarioConfig cfg;
    cfg.x_spl = x;
    cfg.z_side.reset();  // place the side wires on the designed ray
    cfg.I_split = design_splitting_current(cfg);
    cfg.I_side = 10.0;
    const auto res = run_protocol(cfg);
    CHECK(res.report.max_superposition > prev);
    prev = res.report.max_superposition;
  }
}

TEST_CASE("total-field model: flipping side-current signs moves the metrics") {
  // Cross terms between wires react to the current orientation; quantify the
  // sign sensitivity under the full-field model. Signs are irrelevant in the
  // default per-wire model.
  ScenarioConfig plus = reference_config();
  plus.field_model = FieldModel::TotalFieldGradient;
  plus.integrator.max_time = 0.03;
  ScenarioConfig minus = plus;
  minus.I_side = -10.0;

  const auto rp = run_protocol(plus).report;
  const auto rm = run_protocol(minus).report;
  // The first encounter barely changes ...
  CHECK(rp.closest_approach_split == Approx(rm.closest_approach_split).epsilon(5e-3));
  // ... but the accumulated lever arm makes the side approach sign sensitive.
  CHECK(std::abs(rp.closest_approach_side - rm.closest_approach_side) > 1e-8);

  ScenarioConfig per_plus = reference_config();
  ScenarioConfig per_minus = per_plus;
  per_minus.I_side = -10.0;
  CHECK(run_protocol(per_plus).report.closest_approach_side ==
        Approx(run_protocol(per_minus).report.closest_approach_side).epsilon(1e-12));
}

TEST_CASE("designed side-wire height sits on the falling ray") {
  ScenarioConfig cfg;
  cfg.z_side.reset();
  CHECK(cfg.resolved_z_side() == Approx(-cfg.x_spl * cfg.x_spl / (4.0 * cfg.z0)));
  // Reference geometry: -491^2/(4*490) um = -123.0 um, near the reference -122.6.
  CHECK(cfg.resolved_z_side() == Approx(-123.0e-6).epsilon(5e-3));
}

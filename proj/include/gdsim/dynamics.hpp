#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gdsim/fields.hpp"

// Adaptive integration of xdot = v, vdot = a(x) with an embedded
// Dormand-Prince 5(4) pair, quartic dense output, and event location by
// bisection on the dense interpolant. The force near a wire spans several
// orders of magnitude, so fixed steps are not an option.

namespace gdsim {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;   // applies to both meters and meters/second
  double max_step = 1e-5;   // s
  double max_time = 0.05;   // absolute end time of the integration, s
  int output_points = 2000; // fixed output grid over [0, max_time]

  // Output samples are emitted at integer multiples of this spacing so that
  // independently integrated trajectories share a common time grid.
  double output_dt() const { return max_time / output_points; }

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw config_error("integrator tolerances must be > 0");
    }
    if (!(max_step > 0.0)) throw config_error("integrator.max_step must be > 0");
    if (!(max_time > 0.0)) throw config_error("integrator.max_time must be > 0");
    if (output_points < 2) throw config_error("integrator.output_points must be >= 2");
  }
};

enum class EventKind { ClosestApproach, PlaneCrossingX, PlaneCrossingZ, VelocityHorizontal };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::ClosestApproach: return "closest_approach";
    case EventKind::PlaneCrossingX: return "plane_crossing_x";
    case EventKind::PlaneCrossingZ: return "plane_crossing_z";
    case EventKind::VelocityHorizontal: return "velocity_horizontal";
  }
  return "unknown";
}

// What to watch for during integration. Closest approaches are detected as
// minima of the distance to the wire (sign change of d/dt |pos - w|^2).
struct EventSpec {
  EventKind kind = EventKind::ClosestApproach;
  int wire_index = 0;      // ClosestApproach only
  double threshold = 0.0;  // plane coordinate for crossings
  int direction = 0;       // +1 rising zero crossings, -1 falling, 0 both
  bool terminal = false;

  static EventSpec closest_approach(int wire, bool terminal = false) {
    return {EventKind::ClosestApproach, wire, 0.0, +1, terminal};
  }
  static EventSpec plane_x(double x0, bool terminal = false, int direction = 0) {
    return {EventKind::PlaneCrossingX, -1, x0, direction, terminal};
  }
  static EventSpec plane_z(double z0, bool terminal = false, int direction = 0) {
    return {EventKind::PlaneCrossingZ, -1, z0, direction, terminal};
  }
  static EventSpec velocity_horizontal(bool terminal = false, int direction = 0) {
    return {EventKind::VelocityHorizontal, -1, 0.0, direction, terminal};
  }
};

struct Event {
  EventKind kind = EventKind::ClosestApproach;
  int wire_index = -1;
  double threshold = 0.0;
  double t = 0.0;
  TrajectoryState state{};
  double value = 0.0;  // ClosestApproach: distance to the wire at the event
  bool terminal = false;
};

struct Trajectory {
  std::vector<TrajectoryState> states;  // strictly increasing time stamps
  std::vector<Event> events;

  const TrajectoryState& front() const { return states.front(); }
  const TrajectoryState& back() const { return states.back(); }
};

namespace detail {

using StateVec = std::array<double, 4>;  // x, z, vx, vz

inline StateVec rhs(const FieldEnvironment& env, const StateVec& y) {
  const Vec2 a = acceleration(env, {y[0], y[1]});
  return {y[2], y[3], a.x, a.z};
}

inline TrajectoryState to_state(double t, const StateVec& y) {
  return {t, {y[0], y[1]}, {y[2], y[3]}};
}

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                          a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                          a76 = 11.0 / 84.0;
  // y5 - y4 error weights.
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                          e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                          e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  // Dense-output weights.
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;
};

// Quartic interpolant over one accepted step [t0, t0 + h].
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  StateVec r1{}, r2{}, r3{}, r4{}, r5{};

  StateVec eval(double t) const {
    const double theta = (t - t0) / h;
    const double om = 1.0 - theta;
    StateVec out;
    for (int i = 0; i < 4; ++i) {
      out[i] = r1[i] + theta * (r2[i] + om * (r3[i] + theta * (r4[i] + om * r5[i])));
    }
    return out;
  }
};

struct StepResult {
  StateVec y_new{};
  StateVec f_new{};  // FSAL stage, valid derivative at t + h
  double error = 0.0;
  DenseSegment dense{};
};

inline StepResult dopri5_step(const FieldEnvironment& env, double t,
                              const StateVec& y, const StateVec& f,
                              double h, const IntegratorOptions& opts) {
  using C = Dopri5;
  StateVec k1 = f, k2, k3, k4, k5, k6, k7, yt;

  for (int i = 0; i < 4; ++i) yt[i] = y[i] + h * C::a21 * k1[i];
  k2 = rhs(env, yt);
  for (int i = 0; i < 4; ++i) yt[i] = y[i] + h * (C::a31 * k1[i] + C::a32 * k2[i]);
  k3 = rhs(env, yt);
  for (int i = 0; i < 4; ++i) {
    yt[i] = y[i] + h * (C::a41 * k1[i] + C::a42 * k2[i] + C::a43 * k3[i]);
  }
  k4 = rhs(env, yt);
  for (int i = 0; i < 4; ++i) {
    yt[i] = y[i] + h * (C::a51 * k1[i] + C::a52 * k2[i] + C::a53 * k3[i] +
                        C::a54 * k4[i]);
  }
  k5 = rhs(env, yt);
  for (int i = 0; i < 4; ++i) {
    yt[i] = y[i] + h * (C::a61 * k1[i] + C::a62 * k2[i] + C::a63 * k3[i] +
                        C::a64 * k4[i] + C::a65 * k5[i]);
  }
  k6 = rhs(env, yt);

  StepResult out;
  for (int i = 0; i < 4; ++i) {
    out.y_new[i] = y[i] + h * (C::a71 * k1[i] + C::a73 * k3[i] + C::a74 * k4[i] +
                               C::a75 * k5[i] + C::a76 * k6[i]);
  }
  k7 = rhs(env, out.y_new);
  out.f_new = k7;

  double err_sq = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double e = h * (C::e1 * k1[i] + C::e3 * k3[i] + C::e4 * k4[i] +
                          C::e5 * k5[i] + C::e6 * k6[i] + C::e7 * k7[i]);
    const double sc =
        opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(out.y_new[i]));
    err_sq += (e / sc) * (e / sc);
  }
  out.error = std::sqrt(err_sq / 4.0);

  DenseSegment& d = out.dense;
  d.t0 = t;
  d.h = h;
  for (int i = 0; i < 4; ++i) {
    const double dy = out.y_new[i] - y[i];
    const double bspl = h * k1[i] - dy;
    d.r1[i] = y[i];
    d.r2[i] = dy;
    d.r3[i] = bspl;
    d.r4[i] = dy - h * k7[i] - bspl;
    d.r5[i] = h * (C::d1 * k1[i] + C::d3 * k3[i] + C::d4 * k4[i] + C::d5 * k5[i] +
                   C::d6 * k6[i] + C::d7 * k7[i]);
  }
  return out;
}

inline double event_value(const EventSpec& spec, const FieldEnvironment& env,
                          const StateVec& y) {
  switch (spec.kind) {
    case EventKind::ClosestApproach: {
      const Vec2 w = env.wires.at(static_cast<std::size_t>(spec.wire_index)).position;
      return (y[0] - w.x) * y[2] + (y[1] - w.z) * y[3];
    }
    case EventKind::PlaneCrossingX: return y[0] - spec.threshold;
    case EventKind::PlaneCrossingZ: return y[1] - spec.threshold;
    case EventKind::VelocityHorizontal: return y[3];
  }
  return 0.0;
}

inline bool crossing_matches(double ga, double gb, int direction) {
  if (ga == 0.0) return false;
  if (!(ga * gb < 0.0 || gb == 0.0)) return false;
  if (direction > 0) return ga < 0.0;
  if (direction < 0) return ga > 0.0;
  return true;
}

// Bisect the sign change of watcher `spec` inside [ta, tb] down to 1e-12 s.
inline double refine_event_time(const EventSpec& spec, const FieldEnvironment& env,
                                const DenseSegment& dense, double ta, double tb,
                                double ga) {
  constexpr double kTimeTol = 1e-12;
  for (int iter = 0; iter < 200 && (tb - ta) > kTimeTol; ++iter) {
    const double tm = 0.5 * (ta + tb);
    const double gm = event_value(spec, env, dense.eval(tm));
    if (ga * gm <= 0.0) {
      tb = tm;
    } else {
      ta = tm;
      ga = gm;
    }
  }
  return 0.5 * (ta + tb);
}

inline double initial_step(const FieldEnvironment& env, const StateVec& y,
                           const StateVec& f, double span,
                           const IntegratorOptions& opts) {
  auto weighted_rms = [&](const StateVec& v, const StateVec& ref) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double sc = opts.abs_tol + opts.rel_tol * std::abs(ref[i]);
      s += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(s / 4.0);
  };
  const double d0 = weighted_rms(y, y);
  const double d1 = weighted_rms(f, y);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min({h0, opts.max_step, span});

  StateVec y1;
  for (int i = 0; i < 4; ++i) y1[i] = y[i] + h0 * f[i];
  StateVec f1;
  try {
    f1 = rhs(env, y1);
  } catch (const singularity_error&) {
    return std::min({1e-9, opts.max_step, span});
  }
  StateVec df;
  for (int i = 0; i < 4; ++i) df[i] = f1[i] - f[i];
  const double d2 = weighted_rms(df, y) / h0;

  double h1;
  if (std::max(d1, d2) <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, opts.max_step, span});
}

}  // namespace detail

/// Integrate from `init` until opts.max_time or the first terminal event.
/// States are emitted on the global output grid (multiples of
/// opts.output_dt()) plus the initial and final states; requested events are
/// located on the dense output and recorded with their refined states.
inline Trajectory integrate(const FieldEnvironment& env, const TrajectoryState& init,
                            const IntegratorOptions& opts,
                            const std::vector<EventSpec>& watchers = {}) {
  using detail::StateVec;
  env.validate();
  opts.validate();
  for (const EventSpec& w : watchers) {
    if (w.kind == EventKind::ClosestApproach &&
        (w.wire_index < 0 || static_cast<std::size_t>(w.wire_index) >= env.wires.size())) {
      throw config_error("event watcher wire index out of range");
    }
  }

  Trajectory traj;
  traj.states.push_back(init);
  if (init.t >= opts.max_time) return traj;

  StateVec y{init.pos.x, init.pos.z, init.vel.x, init.vel.z};
  double t = init.t;
  StateVec f = detail::rhs(env, y);

  const double dt_out = opts.output_dt();
  std::int64_t k_next = static_cast<std::int64_t>(std::floor(t / dt_out)) + 1;
  while (static_cast<double>(k_next) * dt_out <= t) ++k_next;

  std::vector<double> g_prev(watchers.size());
  for (std::size_t i = 0; i < watchers.size(); ++i) {
    g_prev[i] = detail::event_value(watchers[i], env, y);
  }

  double h = detail::initial_step(env, y, f, opts.max_time - t, opts);
  constexpr long kMaxSteps = 20'000'000;

  for (long step = 0; step < kMaxSteps; ++step) {
    h = std::min({h, opts.max_step, opts.max_time - t});

    // A trial stage may probe a wire core even though the accepted path never
    // enters it; shrink the step first and only give up once it underflows.
    detail::StepResult res;
    try {
      res = detail::dopri5_step(env, t, y, f, h, opts);
    } catch (const singularity_error&) {
      h *= 0.2;
      if (!(h > 1e-15 * std::max(1.0, std::abs(t)))) throw;
      continue;
    }

    if (res.error > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(res.error, -0.2));
      if (!(h > 1e-15 * std::max(1.0, std::abs(t)))) {
        throw convergence_error("step controller cannot meet tolerances at t = " +
                                std::to_string(t));
      }
      continue;
    }

    const double t_new = t + h;

    // Locate events. Scanning the half-step as well guards against a
    // down-and-up excursion hidden inside one step.
    struct Fired {
      std::size_t watcher;
      double t;
      StateVec y;
    };
    std::vector<Fired> fired;
    const double t_half = t + 0.5 * h;
    const StateVec y_half = res.dense.eval(t_half);
    for (std::size_t i = 0; i < watchers.size(); ++i) {
      const double gh = detail::event_value(watchers[i], env, y_half);
      const double gn = detail::event_value(watchers[i], env, res.y_new);
      const struct {
        double ta, tb, ga, gb;
      } halves[2] = {{t, t_half, g_prev[i], gh}, {t_half, t_new, gh, gn}};
      for (const auto& hv : halves) {
        if (hv.ga == 0.0) continue;  // unarmed (e.g. release from rest)
        if (detail::crossing_matches(hv.ga, hv.gb, watchers[i].direction)) {
          const double te = detail::refine_event_time(watchers[i], env, res.dense,
                                                      hv.ta, hv.tb, hv.ga);
          fired.push_back({i, te, res.dense.eval(te)});
        }
      }
      g_prev[i] = gn;
    }
    std::sort(fired.begin(), fired.end(),
              [](const Fired& a, const Fired& b) { return a.t < b.t; });

    std::optional<Fired> terminal;
    for (const Fired& fe : fired) {
      const EventSpec& spec = watchers[fe.watcher];
      Event ev;
      ev.kind = spec.kind;
      ev.wire_index = spec.kind == EventKind::ClosestApproach ? spec.wire_index : -1;
      ev.threshold = spec.threshold;
      ev.t = fe.t;
      ev.state = detail::to_state(fe.t, fe.y);
      ev.terminal = spec.terminal;
      if (spec.kind == EventKind::ClosestApproach) {
        ev.value = norm(ev.state.pos - env.wires[spec.wire_index].position);
      } else {
        ev.value = detail::event_value(spec, env, fe.y);
      }
      traj.events.push_back(ev);
      if (spec.terminal) {
        terminal = fe;
        break;
      }
    }

    const double t_stop = terminal ? terminal->t : t_new;
    while (static_cast<double>(k_next) * dt_out < t_stop) {
      const double tq = static_cast<double>(k_next) * dt_out;
      if (tq > t) {
        traj.states.push_back(detail::to_state(tq, res.dense.eval(tq)));
      }
      ++k_next;
    }

    if (terminal) {
      if (terminal->t > traj.states.back().t) {
        traj.states.push_back(detail::to_state(terminal->t, terminal->y));
      }
      return traj;
    }

    t = t_new;
    y = res.y_new;
    f = res.f_new;

    const double factor =
        res.error == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(res.error, -0.2), 0.2, 5.0);
    h *= factor;

    if (t >= opts.max_time) break;
  }

  if (t < opts.max_time) {
    throw convergence_error("integration exceeded the step budget");
  }
  if (traj.states.back().t < t) {
    traj.states.push_back(detail::to_state(t, y));
  }
  return traj;
}

/// Minimum distance between the trajectory and the given wire, read from the
/// refined closest-approach events.
inline double closest_approach(const Trajectory& traj, int wire_index) {
  double best = std::numeric_limits<double>::infinity();
  for (const Event& ev : traj.events) {
    if (ev.kind == EventKind::ClosestApproach && ev.wire_index == wire_index) {
      best = std::min(best, ev.value);
    }
  }
  if (!std::isfinite(best)) {
    throw no_approach_error("no closest-approach event for wire " +
                            std::to_string(wire_index));
  }
  return best;
}

}  // namespace gdsim

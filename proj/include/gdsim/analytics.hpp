#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gdsim/core.hpp"

// Closed-form results: free-fall kinematics, elastic scattering off the
// repulsive 1/r^2 potential of a current-carrying wire, current-density
// relations, spin-gradient initial separation, and wave-packet widths.

namespace gdsim {
namespace analytics {

// One scattering encounter: incident speed v, impact parameter b, current I.
struct ScatteringInput {
  double current = 0.0;           // A
  double impact_parameter = 0.0;  // m
  double incident_speed = 0.0;    // m/s

  void validate() const {
    if (!(current > 0.0) || !(impact_parameter > 0.0) || !(incident_speed > 0.0)) {
      throw std::domain_error("scattering input fields must be > 0");
    }
  }
};

// Particle with an embedded electron spin in a linear field B = eta * x.
struct NVModel {
  double mass = 1e-15;  // kg
  double eta = 45.0;    // field gradient, T/m
};

struct WavePacketModel {
  double mass = 1e-15;       // kg
  double trap_omega = 100.0; // rad/s
};

/// Speed acquired falling from rest through height z0: sqrt(2 g z0).
inline double incident_velocity(const PhysicalConstants& c, double z0) {
  if (z0 < 0.0) throw std::domain_error("z0 must be >= 0");
  return std::sqrt(2.0 * c.g * z0);
}

/// Free-fall time through height z0: sqrt(2 z0 / g).
inline double fall_time(const PhysicalConstants& c, double z0) {
  if (z0 < 0.0) throw std::domain_error("z0 must be >= 0");
  return std::sqrt(2.0 * z0 / c.g);
}

/// Dimensionless orbit parameter k = 1 + alpha I^2 / (v^2 b^2), k >= 1.
/// k depends only on the asymptotic angular momentum v*b, not on where the
/// incident conditions are measured.
inline double k_parameter(const PhysicalConstants& c, const ScatteringInput& s) {
  s.validate();
  const double l = s.incident_speed * s.impact_parameter;
  return 1.0 + alpha(c) * s.current * s.current / (l * l);
}

/// Deflection angle between incoming and outgoing asymptotic velocities:
/// theta = (1 - 1/sqrt(k)) pi, in [0, pi).
inline double scattering_angle(const PhysicalConstants& c, const ScatteringInput& s) {
  return (1.0 - 1.0 / std::sqrt(k_parameter(c, s))) * std::numbers::pi;
}

/// Analytic closest approach of the scattering orbit: d = b sqrt(k).
inline double closest_approach_analytic(const PhysicalConstants& c,
                                        const ScatteringInput& s) {
  return s.impact_parameter * std::sqrt(k_parameter(c, s));
}

/// Current that deflects (v_in, b) by exactly theta: inverts the angle
/// formula through k = (1 - theta/pi)^-2.
inline double current_for_angle(const PhysicalConstants& c, double theta,
                                double b, double v_in) {
  if (!(theta > 0.0) || !(theta < std::numbers::pi)) {
    throw std::domain_error("theta must lie in (0, pi)");
  }
  if (!(b > 0.0) || !(v_in > 0.0)) {
    throw std::domain_error("b and v_in must be > 0");
  }
  const double root_k = 1.0 / (1.0 - theta / std::numbers::pi);
  const double k = root_k * root_k;
  return v_in * b * std::sqrt((k - 1.0) / alpha(c));
}

struct TotalTimeBreakdown {
  double t1 = 0.0;  // free fall to the splitting wire
  double t2 = 0.0;  // splitting wire to side wire
  double t3 = 0.0;  // side wire back to the z axis
  double total = 0.0;
};

/// Piecewise flight time of the two-stage geometry, ignoring the short
/// deceleration near the wires:
///   t_tot = sqrt(2 z0/g) (1 + x/(2 z0) + x/sqrt(4 z0^2 + x^2)).
inline TotalTimeBreakdown total_time(const PhysicalConstants& c, double z0,
                                     double x_spl) {
  if (!(z0 > 0.0) || !(x_spl > 0.0)) {
    throw std::domain_error("z0 and x_spl must be > 0");
  }
  TotalTimeBreakdown out;
  const double v_in = incident_velocity(c, z0);
  out.t1 = fall_time(c, z0);
  out.t2 = x_spl / v_in;
  out.t3 = x_spl / std::sqrt(v_in * v_in + c.g * c.g * out.t2 * out.t2);
  out.total = out.t1 + out.t2 + out.t3;
  return out;
}

/// Current density through a wire of radius d: I / (pi d^2).
inline double current_density(double current, double d) {
  if (!(d > 0.0)) throw std::domain_error("d must be > 0");
  return current / (std::numbers::pi * d * d);
}

/// Same density written through C = I/b with d taken as the analytic closest
/// approach: (1/b) C v^2 / (pi (v^2 + alpha C^2)). Agrees with
/// current_density(I, b sqrt(k)) identically.
inline double current_density_from_impact(const PhysicalConstants& c,
                                          const ScatteringInput& s) {
  s.validate();
  const double C = s.current / s.impact_parameter;
  const double v2 = s.incident_speed * s.incident_speed;
  return C * v2 /
         (s.impact_parameter * std::numbers::pi * (v2 + alpha(c) * C * C));
}

/// Density needed for a right-angle deflection: linear in the incident
/// velocity, inverse in the impact parameter.
inline double current_density_right_angle(const PhysicalConstants& c, double b,
                                          double v_in) {
  if (!(b > 0.0) || !(v_in > 0.0)) throw std::domain_error("b, v_in must be > 0");
  return v_in * std::sqrt(3.0 / alpha(c)) / (4.0 * b * std::numbers::pi);
}

/// Oscillation frequency of a diamagnetic particle in a linear field:
/// omega = sqrt(-chi_rho / mu0) * eta.
inline double nv_angular_frequency(const PhysicalConstants& c, const NVModel& nv) {
  if (nv.eta < 0.0) throw std::domain_error("eta must be >= 0");
  return std::sqrt(-c.chi_rho / c.mu0) * nv.eta;
}

/// Signed separation between the two spin branches after time t:
///   D(t) = (2 g_s mu_B mu0 / -chi_rho) (1 / m eta) (cos(omega t) - 1).
inline double nv_initial_separation(const PhysicalConstants& c, const NVModel& nv,
                                    double t) {
  if (t < 0.0) throw std::domain_error("t must be >= 0");
  if (!(nv.eta > 0.0) || !(nv.mass > 0.0)) {
    throw std::domain_error("nv.eta and nv.mass must be > 0");
  }
  const double prefactor = 2.0 * c.g_s * c.mu_B * c.mu0 /
                           (-c.chi_rho * nv.mass * nv.eta);
  return prefactor * (std::cos(nv_angular_frequency(c, nv) * t) - 1.0);
}

struct SpinAccelerations {
  double plus = 0.0;   // spin +1 branch, m/s^2
  double minus = 0.0;  // spin -1 branch
};

/// Spin-gradient accelerations -/+ g_s mu_B eta / m; inversely proportional
/// to the mass, unlike the diamagnetic term.
inline SpinAccelerations nv_spin_acceleration(const PhysicalConstants& c,
                                              const NVModel& nv) {
  if (nv.eta < 0.0 || !(nv.mass > 0.0)) {
    throw std::domain_error("nv.eta must be >= 0 and nv.mass > 0");
  }
  const double a = c.g_s * c.mu_B * nv.eta / nv.mass;
  return {-a, +a};
}

struct GroundStateWidths {
  double dx = 0.0;  // m
  double dp = 0.0;  // kg m/s
};

/// Minimum-uncertainty widths of the trap ground state; dx*dp = hbar/2.
inline GroundStateWidths trap_ground_widths(const PhysicalConstants& c,
                                            double mass, double omega) {
  if (!(mass > 0.0) || !(omega > 0.0)) {
    throw std::domain_error("mass and omega must be > 0");
  }
  return {std::sqrt(c.hbar / (2.0 * mass * omega)),
          std::sqrt(c.hbar * mass * omega / 2.0)};
}

/// Gaussian wave-packet width after free evolution for time t.
inline double free_spread_width(const PhysicalConstants& c, double dx0,
                                double mass, double t) {
  if (!(dx0 > 0.0) || !(mass > 0.0) || t < 0.0) {
    throw std::domain_error("dx0, mass must be > 0 and t >= 0");
  }
  const double spread = c.hbar * t / (2.0 * mass * dx0);
  return std::sqrt(dx0 * dx0 + spread * spread);
}

/// Velocity change during one wire encounter, estimated as the diamagnetic
/// acceleration at a reference distance times the interaction time b/v.
inline double scattering_velocity_kick(const PhysicalConstants& c,
                                       const ScatteringInput& s,
                                       double r_ref = 1e-6) {
  s.validate();
  if (!(r_ref > 0.0)) throw std::domain_error("r_ref must be > 0");
  const double a_dia = alpha(c) * s.current * s.current / (r_ref * r_ref * r_ref);
  return a_dia * s.impact_parameter / s.incident_speed;
}

/// Uncertainty-principle floor on the packet width after a velocity kick dv.
inline double min_width_after_scattering(const PhysicalConstants& c, double mass,
                                         double dv) {
  if (!(mass > 0.0) || !(dv > 0.0)) {
    throw std::domain_error("mass and dv must be > 0");
  }
  return c.hbar / (2.0 * mass * dv);
}

}  // namespace analytics
}  // namespace gdsim

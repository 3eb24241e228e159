#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

// Core domain types and physical constants shared by every other header.
// All quantities are SI base units end to end; configuration files may use
// scaled units but are converted at parse time (see config.hpp).

namespace gdsim {

// ---------------------------------------------------------------------------
// Errors

/// Field or trajectory evaluation reached a wire core (r <= exclusion radius).
class singularity_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A root solve or the adaptive step controller failed to converge.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested closest-approach event does not exist on the trajectory.
class no_approach_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory never reached the scattering stage required by the protocol.
class topology_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration input is malformed or violates an invariant.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Planar vector. Dynamics are restricted to the x-z plane; gravity acts
// along -z and wires run perpendicular to the plane.

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.z}; }
constexpr Vec2 operator*(Vec2 v, double s) { return s * v; }
constexpr Vec2 operator-(Vec2 v) { return {-v.x, -v.z}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }
constexpr double norm_sq(Vec2 v) { return v.x * v.x + v.z * v.z; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.z); }

// ---------------------------------------------------------------------------
// Physical constants. Defaults describe a diamond nanocrystal in Earth
// gravity; chi_rho is the (negative) mass magnetic susceptibility.

struct PhysicalConstants {
  double mu0 = 4.0e-7 * std::numbers::pi;  // vacuum permeability, T m / A
  double g = 9.8;                          // gravitational acceleration, m/s^2
  double chi_rho = -6.2e-9;                // mass susceptibility, m^3/kg
  double hbar = 1.054571817e-34;           // reduced Planck constant, J s
  double g_s = 2.0;                        // Lande g-factor
  double mu_B = 9.2740100783e-24;          // Bohr magneton, J/T

  void validate() const {
    if (!(mu0 > 0.0)) throw config_error("constants.mu0 must be > 0");
    if (!(g > 0.0)) throw config_error("constants.g must be > 0");
    if (!(chi_rho < 0.0)) {
      throw config_error("constants.chi_rho must be < 0 (diamagnetic)");
    }
    if (!(hbar > 0.0)) throw config_error("constants.hbar must be > 0");
    if (!(g_s > 0.0)) throw config_error("constants.g_s must be > 0");
    if (!(mu_B > 0.0)) throw config_error("constants.mu_B must be > 0");
  }
};

/// Diamagnetic force coefficient: -chi_rho * mu0 / (4 pi^2).
/// Strictly positive for any diamagnetic material, units m^4 s^-2 A^-2.
inline double alpha(const PhysicalConstants& c) {
  constexpr double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  return -c.chi_rho * c.mu0 / four_pi_sq;
}

// ---------------------------------------------------------------------------
// An infinite straight wire perpendicular to the x-z plane. The current sign
// selects the direction along the wire axis; radius is an exclusion radius
// inside which field evaluation is refused (0 means only the exact center).

struct Wire {
  Vec2 position{};
  double current = 0.0;  // signed amperes
  double radius = 0.0;   // meters, >= 0

  void validate() const {
    if (!(radius >= 0.0)) throw config_error("wire radius must be >= 0");
    if (!std::isfinite(current)) throw config_error("wire current must be finite");
  }
};

// Mass never enters the equation of motion (the acceleration is mass
// independent); it is carried only for the analytics that do depend on it.
struct ParticleSpec {
  double mass = 1e-15;       // kg
  double chi_rho = -6.2e-9;  // m^3/kg, defaults to the constants value

  void validate() const {
    if (!(mass > 0.0)) throw config_error("particle.mass must be > 0");
    if (!(chi_rho < 0.0)) throw config_error("particle.chi_rho must be < 0");
  }
};

struct TrajectoryState {
  double t = 0.0;  // seconds
  Vec2 pos{};      // meters
  Vec2 vel{};      // meters/second
};

}  // namespace gdsim

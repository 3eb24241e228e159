#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gdsim/protocol.hpp"

// Propagation of a static relative current offset through the two scattering
// events: closed-form deviation estimates on a segmented path model, the
// resulting current-stability limits, and a Monte Carlo cross-check that
// re-runs the full protocol with perturbed currents.

namespace gdsim {
namespace sensitivity {

/// Sensitivity coefficient of the deflection angle: beta = (k - 1) pi / k^(3/2).
inline double beta_coefficient(double k) {
  if (k < 1.0) throw std::domain_error("beta_coefficient requires k >= 1");
  return (k - 1.0) * std::numbers::pi / (k * std::sqrt(k));
}

// Trajectory idealized as straight segments of length L between scatterings;
// beta1/beta2 belong to the first (pi/2) and second (~3 pi/4) deflections.
struct SegmentedPath {
  double L = 500e-6;  // m
  double b = 0.5e-6;  // m
  double beta1 = beta_coefficient(4.0);
  double beta2 = beta_coefficient(16.0);

  static SegmentedPath from_k(double L, double b, double k1, double k2) {
    return {L, b, beta_coefficient(k1), beta_coefficient(k2)};
  }

  void validate() const {
    if (!(L > 0.0) || !(b > 0.0)) throw std::domain_error("L and b must be > 0");
  }
};

struct AngleShift {
  double total = 0.0;         // rad
  double from_current = 0.0;  // beta * dI/I
  double from_impact = 0.0;   // -beta * db/b
};

/// First-order shift of one deflection angle under relative current and
/// impact-parameter offsets.
inline AngleShift delta_theta(double di_rel, double db_rel, double beta) {
  AngleShift out;
  out.from_current = beta * di_rel;
  out.from_impact = -beta * db_rel;
  out.total = out.from_current + out.from_impact;
  return out;
}

/// Transverse deviation when reaching the second wire: beta1 * dI/I * L.
inline double first_deviation(double di_rel, const SegmentedPath& p) {
  p.validate();
  return p.beta1 * di_rel * p.L;
}

/// Deviation at the end of the path, dominated by the impact-parameter shift
/// feeding the second deflection: -beta1 beta2 (dI/I) L^2 / b. Valid only in
/// the L >> b regime.
inline double second_deviation(double di_rel, const SegmentedPath& p) {
  p.validate();
  if (p.L / p.b < 100.0) {
    throw std::domain_error("second_deviation requires L/b >= 100 (got " +
                            std::to_string(p.L / p.b) + ")");
  }
  return -p.beta1 * p.beta2 * di_rel * p.L * p.L / p.b;
}

/// Largest |dI/I| keeping the terminal deviation below target_db2:
/// b * target / (beta1 beta2 L^2).
inline double current_limit(double target_db2, const SegmentedPath& p) {
  p.validate();
  if (!(target_db2 > 0.0)) throw std::domain_error("target_db2 must be > 0");
  return p.b * target_db2 / (p.beta1 * p.beta2 * p.L * p.L);
}

enum class FluctuationMode { Fixed, Uniform, Gaussian };

struct FluctuationSpec {
  double relative_sigma = 1e-6;  // dI/I scale (exact offset in Fixed mode)
  FluctuationMode mode = FluctuationMode::Uniform;
  int samples = 64;
  std::uint64_t seed = 12345;
  int threads = 0;  // 0 -> hardware concurrency

  void validate() const {
    if (samples < 1) throw config_error("fluctuation.samples must be >= 1");
    if (!std::isfinite(relative_sigma)) {
      throw config_error("fluctuation.relative_sigma must be finite");
    }
    // A signed offset is meaningful in Fixed mode; the random modes use the
    // magnitude as a scale.
    if (mode != FluctuationMode::Fixed && relative_sigma < 0.0) {
      throw config_error("fluctuation.relative_sigma must be >= 0");
    }
  }
};

struct DeviationStats {
  double mean = 0.0;  // signed z deviation at the terminal crossing, m
  double sd = 0.0;
  int samples = 0;
  std::vector<double> offsets;     // drawn dI/I per sample
  std::vector<double> deviations;  // per-sample deviation, m
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& s) {
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

// Per-sample derived stream: statistics are identical no matter how samples
// are distributed across workers.
inline double draw_offset(const FluctuationSpec& spec, int sample) {
  switch (spec.mode) {
    case FluctuationMode::Fixed:
      return spec.relative_sigma;
    case FluctuationMode::Uniform: {
      std::uint64_t s = spec.seed ^ (0xA24BAED4963EE407ULL * (sample + 1));
      return spec.relative_sigma * (2.0 * uniform01(s) - 1.0);
    }
    case FluctuationMode::Gaussian: {
      std::uint64_t s = spec.seed ^ (0xA24BAED4963EE407ULL * (sample + 1));
      const double u1 = std::max(uniform01(s), 0x1.0p-60);
      const double u2 = uniform01(s);
      return spec.relative_sigma * std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * std::numbers::pi * u2);
    }
  }
  return 0.0;
}

}  // namespace detail

/// Re-run the protocol with every wire current scaled by (1 + dI/I) drawn
/// once per sample, and record the signed z deviation of the right branch at
/// its terminal x = 0 crossing relative to the unperturbed run.
inline DeviationStats monte_carlo_deviation(const ScenarioConfig& cfg,
                                            const FluctuationSpec& fluct) {
  cfg.validate();
  fluct.validate();

  ScenarioConfig base_cfg = cfg;
  if (!base_cfg.I_split) base_cfg.I_split = design_splitting_current(base_cfg);
  if (!base_cfg.I_side) base_cfg.I_side = solve_side_current(base_cfg, base_cfg.side_bracket);

  const FieldEnvironment base_env = base_cfg.environment(*base_cfg.I_split, *base_cfg.I_side);
  const TrajectoryState baseline = [&] {
    const auto br = gdsim::detail::run_branch(base_env, base_cfg, +1);
    return br.traj.states.back();
  }();

  DeviationStats stats;
  stats.samples = fluct.samples;
  stats.offsets.resize(static_cast<std::size_t>(fluct.samples));
  stats.deviations.resize(static_cast<std::size_t>(fluct.samples));

  auto run_sample = [&](int i) {
    const double offset = detail::draw_offset(fluct, i);
    const FieldEnvironment env = base_cfg.environment(
        *base_cfg.I_split * (1.0 + offset), *base_cfg.I_side * (1.0 + offset));
    const auto br = gdsim::detail::run_branch(env, base_cfg, +1);
    stats.offsets[static_cast<std::size_t>(i)] = offset;
    stats.deviations[static_cast<std::size_t>(i)] =
        br.traj.states.back().pos.z - baseline.pos.z;
  };

  unsigned n_threads = fluct.threads > 0
                           ? static_cast<unsigned>(fluct.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(fluct.samples));
  if (n_threads <= 1) {
    for (int i = 0; i < fluct.samples; ++i) run_sample(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = static_cast<int>(w); i < fluct.samples;
               i += static_cast<int>(n_threads)) {
            run_sample(i);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  double sum = 0.0;
  for (double d : stats.deviations) sum += d;
  stats.mean = sum / fluct.samples;
  if (fluct.samples > 1) {
    double ss = 0.0;
    for (double d : stats.deviations) ss += (d - stats.mean) * (d - stats.mean);
    stats.sd = std::sqrt(ss / (fluct.samples - 1));
  }
  return stats;
}

}  // namespace sensitivity
}  // namespace gdsim

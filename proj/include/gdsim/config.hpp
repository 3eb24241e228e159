#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdsim/protocol.hpp"
#include "gdsim/sensitivity.hpp"

// One JSON document configures every command. Unset fields fall back to the
// bundled two-stage scenario; an optional "units" block lets geometry be
// written in micrometers etc., converted to SI at parse time. The resolved
// form is always serialized back in SI with every field explicit, so
// parse -> resolve -> serialize -> parse is the identity.

namespace gdsim {

using json = nlohmann::ordered_json;

inline constexpr int kConfigFormatVersion = 1;

struct NVSection {
  double mass = 1e-15;   // kg
  double eta = 45.0;     // T/m
  double window = 0.5;   // s, search window for the separation maximum
};

struct WavePacketSection {
  double mass = 1e-15;    // kg
  double omega = 100.0;   // rad/s
  double time = 0.02;     // s, free-evolution span
  double dx0 = 2e-11;     // m, initial packet width used for the spreading row
};

struct FluctuationConfig {
  sensitivity::FluctuationSpec spec{};
  std::vector<double> L_values{50e-6, 500e-6};  // m
  double target_db2 = 2e-11;                    // m
};

struct OutputConfig {
  bool write_trajectories = true;
  bool write_events = true;
  bool write_plot_data = true;
};

struct AppConfig {
  int format_version = kConfigFormatVersion;
  PhysicalConstants constants{};
  ParticleSpec particle{};
  ScenarioConfig scenario{};  // carries constants/particle/integrator copies
  IntegratorOptions integrator{};
  FluctuationConfig fluctuation{};
  OutputConfig outputs{};
  std::optional<NVSection> nv = NVSection{};
  std::optional<WavePacketSection> wavepacket = WavePacketSection{};

  // ScenarioConfig is the unit the protocol consumes; keep its embedded
  // copies in sync with the top-level sections.
  ScenarioConfig resolved_scenario() const {
    ScenarioConfig s = scenario;
    s.constants = constants;
    s.particle = particle;
    s.integrator = integrator;
    return s;
  }

  void validate() const {
    if (format_version != kConfigFormatVersion) {
      throw config_error("unsupported format_version " + std::to_string(format_version));
    }
    resolved_scenario().validate();
    fluctuation.spec.validate();
    if (!(fluctuation.target_db2 > 0.0)) {
      throw config_error("fluctuation.target_db2 must be > 0");
    }
    for (double L : fluctuation.L_values) {
      if (!(L > 0.0)) throw config_error("fluctuation.L_values entries must be > 0");
    }
    if (nv && (!(nv->mass > 0.0) || !(nv->eta > 0.0) || !(nv->window > 0.0))) {
      throw config_error("nv section fields must be > 0");
    }
    if (wavepacket && (!(wavepacket->mass > 0.0) || !(wavepacket->omega > 0.0) ||
                       !(wavepacket->time >= 0.0) || !(wavepacket->dx0 > 0.0))) {
      throw config_error("wavepacket section fields must be positive");
    }
  }
};

namespace detail_config {

inline void check_keys(const json& obj, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw config_error("unknown key \"" + section + key + "\"");
  }
}

inline double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw config_error(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

inline bool get_bool(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw config_error(std::string("field \"") + key + "\" must be a boolean");
  return v.get<bool>();
}

inline std::optional<double> get_opt_num(const json& obj, const char* key,
                                         std::optional<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) {
    throw config_error(std::string("field \"") + key + "\" must be a number or null");
  }
  return v.get<double>();
}

struct UnitScales {
  double length = 1.0;
  double time = 1.0;
};

inline UnitScales parse_units(const json& root) {
  UnitScales u;
  if (!root.contains("units")) return u;
  const json& units = root.at("units");
  if (!units.is_object()) throw config_error("\"units\" must be an object");
  check_keys(units, "units.", {"length", "time"});
  if (units.contains("length")) {
    const std::string s = units.at("length").get<std::string>();
    if (s == "m") u.length = 1.0;
    else if (s == "mm") u.length = 1e-3;
    else if (s == "um") u.length = 1e-6;
    else if (s == "nm") u.length = 1e-9;
    else throw config_error("units.length must be one of m, mm, um, nm");
  }
  if (units.contains("time")) {
    const std::string s = units.at("time").get<std::string>();
    if (s == "s") u.time = 1.0;
    else if (s == "ms") u.time = 1e-3;
    else if (s == "us") u.time = 1e-6;
    else throw config_error("units.time must be one of s, ms, us");
  }
  return u;
}

inline sensitivity::FluctuationMode parse_mode(const std::string& s) {
  if (s == "fixed") return sensitivity::FluctuationMode::Fixed;
  if (s == "uniform") return sensitivity::FluctuationMode::Uniform;
  if (s == "gaussian") return sensitivity::FluctuationMode::Gaussian;
  throw config_error("fluctuation.mode must be fixed, uniform, or gaussian");
}

inline const char* mode_name(sensitivity::FluctuationMode m) {
  switch (m) {
    case sensitivity::FluctuationMode::Fixed: return "fixed";
    case sensitivity::FluctuationMode::Uniform: return "uniform";
    case sensitivity::FluctuationMode::Gaussian: return "gaussian";
  }
  return "uniform";
}

}  // namespace detail_config

/// Parse a config document, overlaying the bundled scenario defaults.
inline AppConfig parse_config(const json& root) {
  using namespace detail_config;
  if (!root.is_object()) throw config_error("config root must be a JSON object");
  check_keys(root, "", {"format_version", "units", "constants", "particle", "scenario",
                        "integrator", "fluctuation", "outputs", "nv", "wavepacket"});

  AppConfig cfg;
  cfg.nv.reset();
  cfg.wavepacket.reset();
  const UnitScales u = parse_units(root);

  if (root.contains("format_version")) {
    cfg.format_version = root.at("format_version").get<int>();
  }

  if (root.contains("constants")) {
    const json& c = root.at("constants");
    check_keys(c, "constants.", {"mu0", "g", "chi_rho", "hbar", "g_s", "mu_B"});
    cfg.constants.mu0 = get_num(c, "mu0", cfg.constants.mu0);
    cfg.constants.g = get_num(c, "g", cfg.constants.g);
    cfg.constants.chi_rho = get_num(c, "chi_rho", cfg.constants.chi_rho);
    cfg.constants.hbar = get_num(c, "hbar", cfg.constants.hbar);
    cfg.constants.g_s = get_num(c, "g_s", cfg.constants.g_s);
    cfg.constants.mu_B = get_num(c, "mu_B", cfg.constants.mu_B);
  }

  cfg.particle.chi_rho = cfg.constants.chi_rho;
  if (root.contains("particle")) {
    const json& p = root.at("particle");
    check_keys(p, "particle.", {"mass", "chi_rho"});
    cfg.particle.mass = get_num(p, "mass", cfg.particle.mass);
    cfg.particle.chi_rho = get_num(p, "chi_rho", cfg.particle.chi_rho);
  }

  if (root.contains("scenario")) {
    const json& s = root.at("scenario");
    check_keys(s, "scenario.",
               {"z0", "delta_x0", "x_spl", "z_side", "I_split", "I_side", "wire_radius",
                "gravity_on", "field_model", "side_bracket", "max_current_density"});
    ScenarioConfig& sc = cfg.scenario;
    auto set_length = [&](const char* key, double& field) {
      if (s.contains(key)) field = u.length * get_num(s, key, 0.0);
    };
    set_length("z0", sc.z0);
    set_length("delta_x0", sc.delta_x0);
    set_length("x_spl", sc.x_spl);
    if (s.contains("z_side")) {
      const auto z = get_opt_num(s, "z_side", std::nullopt);
      sc.z_side = z ? std::optional<double>(u.length * *z) : std::nullopt;
    }
    sc.I_split = get_opt_num(s, "I_split", sc.I_split);
    sc.I_side = get_opt_num(s, "I_side", sc.I_side);
    set_length("wire_radius", sc.wire_radius);
    sc.gravity_on = get_bool(s, "gravity_on", sc.gravity_on);
    if (s.contains("field_model")) {
      const std::string m = s.at("field_model").get<std::string>();
      if (m == "per_wire") sc.field_model = FieldModel::PerWireForceSum;
      else if (m == "total_field") sc.field_model = FieldModel::TotalFieldGradient;
      else throw config_error("scenario.field_model must be per_wire or total_field");
    }
    if (s.contains("side_bracket")) {
      const json& b = s.at("side_bracket");
      if (!b.is_array() || b.size() != 2) {
        throw config_error("scenario.side_bracket must be a [lo, hi] array");
      }
      sc.side_bracket = {b.at(0).get<double>(), b.at(1).get<double>()};
    }
    sc.max_current_density = get_num(s, "max_current_density", sc.max_current_density);
  }

  if (root.contains("integrator")) {
    const json& it = root.at("integrator");
    check_keys(it, "integrator.",
               {"rel_tol", "abs_tol", "max_step", "max_time", "output_points"});
    cfg.integrator.rel_tol = get_num(it, "rel_tol", cfg.integrator.rel_tol);
    cfg.integrator.abs_tol = get_num(it, "abs_tol", cfg.integrator.abs_tol);
    if (it.contains("max_step")) cfg.integrator.max_step = u.time * get_num(it, "max_step", 0.0);
    if (it.contains("max_time")) cfg.integrator.max_time = u.time * get_num(it, "max_time", 0.0);
    if (it.contains("output_points")) {
      cfg.integrator.output_points = it.at("output_points").get<int>();
    }
  }

  if (root.contains("fluctuation")) {
    const json& f = root.at("fluctuation");
    check_keys(f, "fluctuation.",
               {"relative_sigma", "mode", "samples", "seed", "threads", "L_values",
                "target_db2"});
    auto& spec = cfg.fluctuation.spec;
    spec.relative_sigma = get_num(f, "relative_sigma", spec.relative_sigma);
    if (f.contains("mode")) {
      spec.mode = detail_config::parse_mode(f.at("mode").get<std::string>());
    }
    if (f.contains("samples")) spec.samples = f.at("samples").get<int>();
    if (f.contains("seed")) spec.seed = f.at("seed").get<std::uint64_t>();
    if (f.contains("threads")) spec.threads = f.at("threads").get<int>();
    if (f.contains("L_values")) {
      cfg.fluctuation.L_values.clear();
      for (const json& v : f.at("L_values")) {
        cfg.fluctuation.L_values.push_back(u.length * v.get<double>());
      }
    }
    if (f.contains("target_db2")) {
      cfg.fluctuation.target_db2 = u.length * get_num(f, "target_db2", 0.0);
    }
  }

  if (root.contains("outputs")) {
    const json& o = root.at("outputs");
    check_keys(o, "outputs.", {"write_trajectories", "write_events", "write_plot_data"});
    cfg.outputs.write_trajectories =
        get_bool(o, "write_trajectories", cfg.outputs.write_trajectories);
    cfg.outputs.write_events = get_bool(o, "write_events", cfg.outputs.write_events);
    cfg.outputs.write_plot_data =
        get_bool(o, "write_plot_data", cfg.outputs.write_plot_data);
  }

  if (root.contains("nv") && !root.at("nv").is_null()) {
    const json& n = root.at("nv");
    check_keys(n, "nv.", {"mass", "eta", "window"});
    NVSection nv;
    nv.mass = get_num(n, "mass", nv.mass);
    nv.eta = get_num(n, "eta", nv.eta);
    nv.window = get_num(n, "window", nv.window);
    cfg.nv = nv;
  }

  if (root.contains("wavepacket") && !root.at("wavepacket").is_null()) {
    const json& w = root.at("wavepacket");
    check_keys(w, "wavepacket.", {"mass", "omega", "time", "dx0"});
    WavePacketSection wp;
    wp.mass = get_num(w, "mass", wp.mass);
    wp.omega = get_num(w, "omega", wp.omega);
    wp.time = get_num(w, "time", wp.time);
    wp.dx0 = get_num(w, "dx0", wp.dx0);
    cfg.wavepacket = wp;
  }

  cfg.validate();
  return cfg;
}

/// Canonical SI serialization of a resolved config.
inline json serialize_config(const AppConfig& cfg) {
  json root;
  root["format_version"] = cfg.format_version;
  root["constants"] = {{"mu0", cfg.constants.mu0},   {"g", cfg.constants.g},
                       {"chi_rho", cfg.constants.chi_rho}, {"hbar", cfg.constants.hbar},
                       {"g_s", cfg.constants.g_s},   {"mu_B", cfg.constants.mu_B}};
  root["particle"] = {{"mass", cfg.particle.mass}, {"chi_rho", cfg.particle.chi_rho}};

  json s;
  s["z0"] = cfg.scenario.z0;
  s["delta_x0"] = cfg.scenario.delta_x0;
  s["x_spl"] = cfg.scenario.x_spl;
  s["z_side"] = cfg.scenario.z_side ? json(*cfg.scenario.z_side) : json(nullptr);
  s["I_split"] = cfg.scenario.I_split ? json(*cfg.scenario.I_split) : json(nullptr);
  s["I_side"] = cfg.scenario.I_side ? json(*cfg.scenario.I_side) : json(nullptr);
  s["wire_radius"] = cfg.scenario.wire_radius;
  s["gravity_on"] = cfg.scenario.gravity_on;
  s["field_model"] = cfg.scenario.field_model == FieldModel::PerWireForceSum
                         ? "per_wire"
                         : "total_field";
  s["side_bracket"] = {cfg.scenario.side_bracket.first, cfg.scenario.side_bracket.second};
  s["max_current_density"] = cfg.scenario.max_current_density;
  root["scenario"] = s;

  root["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                        {"abs_tol", cfg.integrator.abs_tol},
                        {"max_step", cfg.integrator.max_step},
                        {"max_time", cfg.integrator.max_time},
                        {"output_points", cfg.integrator.output_points}};
  root["fluctuation"] = {{"relative_sigma", cfg.fluctuation.spec.relative_sigma},
                         {"mode", detail_config::mode_name(cfg.fluctuation.spec.mode)},
                         {"samples", cfg.fluctuation.spec.samples},
                         {"seed", cfg.fluctuation.spec.seed},
                         {"threads", cfg.fluctuation.spec.threads},
                         {"L_values", cfg.fluctuation.L_values},
                         {"target_db2", cfg.fluctuation.target_db2}};
  root["outputs"] = {{"write_trajectories", cfg.outputs.write_trajectories},
                     {"write_events", cfg.outputs.write_events},
                     {"write_plot_data", cfg.outputs.write_plot_data}};
  if (cfg.nv) {
    root["nv"] = {{"mass", cfg.nv->mass}, {"eta", cfg.nv->eta}, {"window", cfg.nv->window}};
  }
  if (cfg.wavepacket) {
    root["wavepacket"] = {{"mass", cfg.wavepacket->mass},
                          {"omega", cfg.wavepacket->omega},
                          {"time", cfg.wavepacket->time},
                          {"dx0", cfg.wavepacket->dx0}};
  }
  return root;
}

/// Parse a config file from disk; syntax errors surface with position info.
inline AppConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
  try {
    return parse_config(root);
  } catch (const json::exception& e) {
    throw config_error("config error in " + path + ": " + e.what());
  }
}

}  // namespace gdsim

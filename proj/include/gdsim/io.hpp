#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gdsim/config.hpp"

// Result serialization. CSV output follows RFC 4180 (CRLF records, '.'
// decimal separator); every numeric field is written with 17 significant
// digits so values survive a round trip exactly.

namespace gdsim {
namespace io {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path.string());
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "t,x,z,vx,vz\r\n";
  for (const TrajectoryState& st : traj.states) {
    s += num(st.t) + "," + num(st.pos.x) + "," + num(st.pos.z) + "," +
         num(st.vel.x) + "," + num(st.vel.z) + "\r\n";
  }
  return s;
}

inline std::string events_csv(const Trajectory& left, const Trajectory& right) {
  std::string s = "branch,kind,wire_index,threshold,t,x,z,vx,vz,value\r\n";
  auto emit = [&s](const char* branch, const Event& ev) {
    s += std::string(branch) + "," + to_string(ev.kind) + "," +
         std::to_string(ev.wire_index) + "," + num(ev.threshold) + "," + num(ev.t) +
         "," + num(ev.state.pos.x) + "," + num(ev.state.pos.z) + "," +
         num(ev.state.vel.x) + "," + num(ev.state.vel.z) + "," + num(ev.value) +
         "\r\n";
  };
  for (const Event& ev : left.events) emit("left", ev);
  for (const Event& ev : right.events) emit("right", ev);
  return s;
}

inline std::string superposition_csv(const std::vector<SuperpositionSample>& series) {
  std::string s = "t,delta_x\r\n";
  for (const auto& p : series) s += num(p.t) + "," + num(p.delta_x) + "\r\n";
  return s;
}

// Both branch positions on the shared grid, for overlay plots.
inline std::string overlay_csv(const Trajectory& left, const Trajectory& right,
                               double dt) {
  auto on_grid = [dt](double t) {
    const double k = std::round(t / dt);
    return std::abs(t - k * dt) <= 1e-9 * dt;
  };
  std::string s = "t,x_left,z_left,x_right,z_right\r\n";
  std::size_t i = 0, j = 0;
  while (i < left.states.size() && j < right.states.size()) {
    const auto& a = left.states[i];
    const auto& b = right.states[j];
    if (!on_grid(a.t)) {
      ++i;
      continue;
    }
    if (!on_grid(b.t)) {
      ++j;
      continue;
    }
    if (a.t < b.t) {
      ++i;
    } else if (b.t < a.t) {
      ++j;
    } else {
      s += num(a.t) + "," + num(a.pos.x) + "," + num(a.pos.z) + "," +
           num(b.pos.x) + "," + num(b.pos.z) + "\r\n";
      ++i;
      ++j;
    }
  }
  return s;
}

inline json report_json(const ScenarioReport& rep) {
  json j;
  j["max_superposition"] = rep.max_superposition;
  j["t_max_superposition"] = rep.t_max_superposition;
  j["total_time"] = rep.total_time;
  j["closest_approach_split"] = rep.closest_approach_split;
  j["closest_approach_side"] = rep.closest_approach_side;
  j["closure_residual"] = rep.closure_residual;
  j["exit_angle_residual"] = rep.exit_angle_residual;
  j["amplification"] = rep.amplification;
  j["currents"] = {{"I_split", rep.i_split},
                   {"I_side", rep.i_side},
                   {"I_split_designed", rep.i_split_designed},
                   {"I_side_designed", rep.i_side_designed}};
  return j;
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Every output directory carries the manifest that produced it.
inline json run_manifest(const std::string& command, const std::string& config_path,
                         const std::string& out_dir, const AppConfig& cfg) {
  json m;
  m["command"] = command;
  m["config_path"] = config_path;
  m["output_dir"] = out_dir;
  m["format_version"] = cfg.format_version;
  m["timestamp"] = timestamp_utc();
  m["resolved_config"] = serialize_config(cfg);
  return m;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

}  // namespace io
}  // namespace gdsim

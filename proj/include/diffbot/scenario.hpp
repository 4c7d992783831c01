#pragma once

// Named scenarios and their output files.
//
//   trace.csv        one row per control period (schema in kTraceHeader)
//   metrics.txt      name=value, fixed 6 decimals
//   speed_right.dat  two blocks: "t reference" then "t measured"
//   speed_left.dat
//   path.dat         two blocks: "x y" nominal plan then "x y" true path

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diffbot/config.hpp"
#include "diffbot/simulation.hpp"

namespace diffbot {

inline constexpr std::string_view kTraceHeader =
    "t,ref_wr,ref_wl,true_wr,true_wl,meas_wr,meas_wl,est_wr,est_wl,pwm_r,pwm_l,x,y,phi";

inline constexpr std::array<std::string_view, 6> kScenarioNames = {
    "line", "turn", "circle", "hexagon", "hexagon-paper-replay", "settling-compare"};

inline bool is_scenario(std::string_view name) noexcept {
  for (auto s : kScenarioNames) {
    if (s == name) return true;
  }
  return false;
}

/// Plan for a named scenario at the default preset speeds.
inline TrajectoryPlan scenario_plan(std::string_view name, const RobotGeometry& geom) {
  if (name == "line" || name == "settling-compare") {
    return make_plan(PlanKind::line, {.v_mps = 0.1, .duration_s = 5.0});
  }
  if (name == "turn") {
    // one full revolution in place
    return make_plan(PlanKind::turn_in_place, {.v_mps = 0.0, .w_radps = 2.0, .duration_s = std::numbers::pi});
  }
  if (name == "circle") return make_plan(PlanKind::circle, {.v_mps = 0.1, .w_radps = 1.0});
  if (name == "hexagon") return make_plan(PlanKind::hexagon, {.v_mps = 0.1, .w_radps = 2.0, .edge_m = 0.3});
  if (name == "hexagon-paper-replay") return make_replay_plan(geom);
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

/// Scenarios whose wheel commands are meant to stay in the calibrated
/// linear region. The replay transcribes measured hardware speeds and is
/// excluded.
inline constexpr std::array<std::string_view, 4> kPresetScenarios = {"line", "turn", "circle", "hexagon"};

struct RunManifest {
  std::string scenario;
  std::optional<std::string> config_path{};
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed{};
  std::optional<EstimatorMode> estimator{};
};

struct ScenarioResult {
  std::vector<std::pair<std::string, std::optional<double>>> metrics;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline void append_number(std::string& out, double v, const char* fmt) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// CSV text of a trace, 9 significant digits per field.
inline std::string format_trace_csv(const SimTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  out.reserve(trace.rows.size() * 160);
  for (const auto& r : trace.rows) {
    const double fields[] = {r.t,          r.ref.wr_radps,  r.ref.wl_radps, r.truth.wr_radps, r.truth.wl_radps,
                             r.meas.wr_radps, r.meas.wl_radps, r.est.wr_radps, r.est.wl_radps, r.pwm_r,
                             r.pwm_l,      r.pose.x_m,      r.pose.y_m,     r.pose.phi_rad};
    bool first = true;
    for (double f : fields) {
      if (!first) out += ',';
      first = false;
      detail::append_number(out, f, "%.9g");
    }
    out += '\n';
  }
  return out;
}

inline std::string format_metrics(const std::vector<std::pair<std::string, std::optional<double>>>& metrics) {
  std::string out;
  for (const auto& [name, value] : metrics) {
    out += name;
    out += '=';
    if (value) {
      detail::append_number(out, *value, "%.6f");
    } else {
      out += "none";
    }
    out += '\n';
  }
  return out;
}

inline std::string format_speed_plot(const SimTrace& trace, bool right) {
  std::string out = "# reference: t rad/s\n";
  auto block = [&](auto pick) {
    for (const auto& r : trace.rows) {
      detail::append_number(out, r.t, "%.9g");
      out += ' ';
      detail::append_number(out, pick(r), "%.9g");
      out += '\n';
    }
  };
  block([&](const TraceRow& r) { return right ? r.ref.wr_radps : r.ref.wl_radps; });
  out += "\n\n# measured: t rad/s\n";
  block([&](const TraceRow& r) { return right ? r.est.wr_radps : r.est.wl_radps; });
  return out;
}

inline std::string format_path_plot(const std::vector<Pose>& nominal, const SimTrace& trace) {
  std::string out = "# reference: x_m y_m\n";
  auto point = [&](const Pose& p) {
    detail::append_number(out, p.x_m, "%.9g");
    out += ' ';
    detail::append_number(out, p.y_m, "%.9g");
    out += '\n';
  };
  point(Pose{});
  for (const auto& p : nominal) point(p);
  out += "\n\n# actual: x_m y_m\n";
  point(trace.start);
  for (const auto& r : trace.rows) point(r.pose);
  return out;
}

inline std::vector<std::pair<std::string, std::optional<double>>> run_metrics(const SimTrace& trace,
                                                                               double arena_m) {
  const TrackingMetrics m = compute_metrics(trace);
  const Extent e = path_extent(trace);
  return {
      {"settling_r_s", m.settling_r_s},
      {"settling_l_s", m.settling_l_s},
      {"rms_speed_error", m.rms_speed_error},
      {"final_pose_error_m", m.final_pose_error_m},
      {"path_closure_m", m.path_closure_m},
      {"extent_x_m", e.width()},
      {"extent_y_m", e.height()},
      {"fits_arena", fits_arena(trace, arena_m) ? 1.0 : 0.0},
      {"steps", static_cast<double>(trace.rows.size())},
  };
}

/// Runs a named scenario and writes its files into manifest.out_dir.
/// Throws on unknown scenario, unreadable config or invalid parameters.
inline ScenarioResult run_scenario(const RunManifest& manifest) {
  if (!is_scenario(manifest.scenario)) {
    throw std::invalid_argument("unknown scenario '" + manifest.scenario + "'");
  }
  SimConfig cfg = manifest.config_path ? load_config(*manifest.config_path) : SimConfig{};
  if (manifest.seed) cfg.rng_seed = *manifest.seed;
  if (manifest.estimator) cfg.estimator_mode = *manifest.estimator;
  cfg.validate();

  const std::filesystem::path out_dir = manifest.out_dir;
  std::filesystem::create_directories(out_dir);

  const TrajectoryPlan plan = scenario_plan(manifest.scenario, cfg.geometry);
  ScenarioResult result;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = out_dir / name;
    detail::write_file(path, content);
    result.files.push_back(path);
  };
  auto emit_run = [&](const SimTrace& trace, const std::string& suffix) {
    emit("trace" + suffix + ".csv", format_trace_csv(trace));
    emit("speed_right" + suffix + ".dat", format_speed_plot(trace, true));
    emit("speed_left" + suffix + ".dat", format_speed_plot(trace, false));
    emit("path" + suffix + ".dat", format_path_plot(nominal_path(plan, cfg.ts_s), trace));
  };

  if (manifest.scenario == "settling-compare") {
    SimConfig kf_cfg = cfg;
    kf_cfg.estimator_mode = EstimatorMode::kf;
    SimConfig lpf_cfg = cfg;
    lpf_cfg.estimator_mode = EstimatorMode::lpf;
    const SimTrace kf = simulate_run(kf_cfg, plan);
    const SimTrace lpf = simulate_run(lpf_cfg, plan);
    const TrackingMetrics mk = compute_metrics(kf);
    const TrackingMetrics ml = compute_metrics(lpf);
    result.metrics = {
        {"settling_kf_s", worst_settling(mk)},
        {"settling_lpf_s", worst_settling(ml)},
        {"settling_kf_r_s", mk.settling_r_s},
        {"settling_kf_l_s", mk.settling_l_s},
        {"settling_lpf_r_s", ml.settling_r_s},
        {"settling_lpf_l_s", ml.settling_l_s},
        {"rms_speed_error_kf", mk.rms_speed_error},
        {"rms_speed_error_lpf", ml.rms_speed_error},
    };
    emit_run(kf, "");
    emit_run(lpf, "_lpf");
  } else {
    const SimTrace trace = simulate_run(cfg, plan);
    result.metrics = run_metrics(trace, cfg.arena_m);
    emit_run(trace, "");
  }
  emit("metrics.txt", format_metrics(result.metrics));
  return result;
}

}  // namespace diffbot

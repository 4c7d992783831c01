#pragma once

// Flat `key = value` configuration files.
//
//   # comment
//   ts_s = 0.002
//   motor.tau_s = 0.15     # trailing comments are allowed
//
// Unspecified keys keep their defaults. Presets (`gains.preset`,
// `kalman.preset`) are applied before the individual keys they cover, so an
// explicit `gains.kp` always wins regardless of line order.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include "diffbot/simulation.hpp"

namespace diffbot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct ConfigEntry {
  std::string value;
  int line;
};

[[noreturn]] inline void config_fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(const std::string& key, const ConfigEntry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc{} || ptr != end) config_fail(e.line, key + ": expected a number, got '" + e.value + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& key, const ConfigEntry& e) {
  std::int64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc{} || ptr != end) config_fail(e.line, key + ": expected an integer, got '" + e.value + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const ConfigEntry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc{} || ptr != end) config_fail(e.line, key + ": expected a non-negative integer, got '" + e.value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  config_fail(e.line, key + ": expected true or false, got '" + e.value + "'");
}

}  // namespace detail

/// Continuous-time decay rate of the random-walk filter preset (1/s).
inline constexpr double kRandomWalkDecay = -1e-4;

/// Random-walk Kalman preset: a = 1 + A ts, b = 0, large process variance.
inline void apply_random_walk_kalman(SimConfig& cfg) {
  cfg.kalman_follows_motor = false;
  cfg.kalman = {1.0 + kRandomWalkDecay * cfg.ts_s, 1.0, 1e4, 1e7, 0.0};
}

/// Motor-model Kalman preset (the default).
inline void apply_motor_model_kalman(SimConfig& cfg) {
  cfg.kalman_follows_motor = true;
  cfg.kalman = KalmanParams{};
}

inline SimConfig parse_config(std::string_view text) {
  using detail::ConfigEntry;
  std::map<std::string, ConfigEntry> entries;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::config_fail(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) detail::config_fail(line_no, "missing key");
    if (value.empty()) detail::config_fail(line_no, key + ": missing value");
    if (!entries.emplace(key, ConfigEntry{value, line_no}).second) {
      detail::config_fail(line_no, "duplicate key '" + key + "'");
    }
  }

  SimConfig cfg;
  using Setter = std::function<void(const std::string&, const ConfigEntry&)>;
  // Stage 1: keys other settings depend on.
  auto take = [&](const std::string& key) -> const ConfigEntry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  if (auto* e = take("ts_s")) cfg.ts_s = detail::parse_double("ts_s", *e);
  if (auto* e = take("gains.preset")) {
    if (e->value == "initial") cfg.gains = PiGains::initial();
    else if (e->value == "retuned") cfg.gains = PiGains::retuned();
    else detail::config_fail(e->line, "gains.preset: expected initial or retuned, got '" + e->value + "'");
  }
  if (auto* e = take("kalman.preset")) {
    if (e->value == "motor-model") apply_motor_model_kalman(cfg);
    else if (e->value == "random-walk") apply_random_walk_kalman(cfg);
    else detail::config_fail(e->line, "kalman.preset: expected motor-model or random-walk, got '" + e->value + "'");
  }

  // Stage 2: individual keys.
  const std::map<std::string, Setter> setters = {
      {"ts_s", [](auto&, auto&) {}},
      {"gains.preset", [](auto&, auto&) {}},
      {"kalman.preset", [](auto&, auto&) {}},
      {"estimator", [&](const std::string& k, const ConfigEntry& e) {
         const auto mode = parse_estimator(e.value);
         if (!mode) detail::config_fail(e.line, k + ": expected raw, lpf or kf, got '" + e.value + "'");
         cfg.estimator_mode = *mode;
       }},
      {"seed", [&](const std::string& k, const ConfigEntry& e) { cfg.rng_seed = detail::parse_uint(k, e); }},
      {"arena_m", [&](const std::string& k, const ConfigEntry& e) { cfg.arena_m = detail::parse_double(k, e); }},
      {"run_length_s", [&](const std::string& k, const ConfigEntry& e) { cfg.run_length_s = detail::parse_double(k, e); }},
      {"geometry.wheel_radius_m", [&](const std::string& k, const ConfigEntry& e) { cfg.geometry.wheel_radius_m = detail::parse_double(k, e); }},
      {"geometry.axle_length_m", [&](const std::string& k, const ConfigEntry& e) { cfg.geometry.axle_length_m = detail::parse_double(k, e); }},
      {"motor.deadband_pwm", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.deadband_pwm = detail::parse_double(k, e); }},
      {"motor.breakaway_pwm", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.breakaway_pwm = detail::parse_double(k, e); }},
      {"motor.linear_gain", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.linear_gain = detail::parse_double(k, e); }},
      {"motor.linear_knee_radps", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.linear_knee_radps = detail::parse_double(k, e); }},
      {"motor.upper_gain", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.upper_gain = detail::parse_double(k, e); }},
      {"motor.max_pwm", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.max_pwm = detail::parse_double(k, e); }},
      {"motor.tau_s", [&](const std::string& k, const ConfigEntry& e) { cfg.motor.tau_s = detail::parse_double(k, e); }},
      {"plant.right_gain_scale", [&](const std::string& k, const ConfigEntry& e) { cfg.right_plant.gain_scale = detail::parse_double(k, e); }},
      {"plant.left_gain_scale", [&](const std::string& k, const ConfigEntry& e) { cfg.left_plant.gain_scale = detail::parse_double(k, e); }},
      {"plant.right_tau_scale", [&](const std::string& k, const ConfigEntry& e) { cfg.right_plant.tau_scale = detail::parse_double(k, e); }},
      {"plant.left_tau_scale", [&](const std::string& k, const ConfigEntry& e) { cfg.left_plant.tau_scale = detail::parse_double(k, e); }},
      {"encoder.cpr", [&](const std::string& k, const ConfigEntry& e) {
         const auto v = detail::parse_int(k, e);
         if (v <= 0 || v > 1'000'000) detail::config_fail(e.line, k + ": must be in [1, 1000000]");
         cfg.encoder_cpr = static_cast<int>(v);
       }},
      {"encoder.speed_window_s", [&](const std::string& k, const ConfigEntry& e) { cfg.speed_window_s = detail::parse_double(k, e); }},
      {"gains.kp", [&](const std::string& k, const ConfigEntry& e) { cfg.gains.kp = detail::parse_double(k, e); }},
      {"gains.ki", [&](const std::string& k, const ConfigEntry& e) { cfg.gains.ki = detail::parse_double(k, e); }},
      {"kalman.follow_motor", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman_follows_motor = detail::parse_bool(k, e); }},
      {"kalman.a", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman.a = detail::parse_double(k, e); }},
      {"kalman.b", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman.b = detail::parse_double(k, e); }},
      {"kalman.c", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman.c = detail::parse_double(k, e); }},
      {"kalman.q", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman.q = detail::parse_double(k, e); }},
      {"kalman.w", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman.w = detail::parse_double(k, e); }},
      {"kalman.p0", [&](const std::string& k, const ConfigEntry& e) { cfg.kalman_p0 = detail::parse_double(k, e); }},
      {"lpf.cutoff_hz", [&](const std::string& k, const ConfigEntry& e) { cfg.lpf_cutoff_hz = detail::parse_double(k, e); }},
      {"noise.meas_std", [&](const std::string& k, const ConfigEntry& e) { cfg.meas_noise_std = detail::parse_double(k, e); }},
  };

  for (const auto& [key, entry] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) detail::config_fail(entry.line, "unknown key '" + key + "'");
    it->second(key, entry);
  }
  // Setting a or b by hand means the filter no longer tracks the motor model,
  // unless the file says otherwise.
  if ((take("kalman.a") || take("kalman.b")) && !take("kalman.follow_motor")) cfg.kalman_follows_motor = false;

  cfg.validate();
  return cfg;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

/// Documented keys, in the order `diffbot validate` prints them.
inline constexpr std::string_view kConfigKeys[] = {
    "ts_s", "estimator", "seed", "arena_m", "run_length_s",
    "geometry.wheel_radius_m", "geometry.axle_length_m",
    "motor.deadband_pwm", "motor.breakaway_pwm", "motor.linear_gain", "motor.linear_knee_radps",
    "motor.upper_gain", "motor.max_pwm", "motor.tau_s",
    "plant.right_gain_scale", "plant.left_gain_scale", "plant.right_tau_scale", "plant.left_tau_scale",
    "encoder.cpr", "encoder.speed_window_s",
    "gains.preset", "gains.kp", "gains.ki",
    "kalman.preset", "kalman.follow_motor", "kalman.a", "kalman.b", "kalman.c", "kalman.q", "kalman.w", "kalman.p0",
    "lpf.cutoff_hz", "noise.meas_std",
};

}  // namespace diffbot

#pragma once

// Per-wheel PI speed regulator, first-order low-pass filter and the
// Ziegler-Nichols reaction-curve PI rule.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffbot {

/// PI gains. The derivative gain is pinned to zero and only kept so a tuning
/// result can be reported as a full PID triple.
struct PiGains {
  double kp = 0.375;
  double ki = 1.0;
  static constexpr double kd = 0.0;

  /// First tuning (kp = 0.375, ki = 1).
  static constexpr PiGains initial() noexcept { return {0.375, 1.0}; }
  /// Re-tuned set reported with the experimental results (kp = 0.479, ki = 1).
  static constexpr PiGains retuned() noexcept { return {0.479, 1.0}; }

  bool valid() const noexcept { return std::isfinite(kp) && std::isfinite(ki) && kp >= 0.0 && ki >= 0.0; }
};

struct PiState {
  double integral = 0.0;
  double last_output = 0.0;
};

struct PiOutput {
  PiState state;
  double output;
};

/// One PI update with output clamping and conditional integration: the error
/// is only accumulated when doing so does not push an already saturated
/// output further into saturation.
inline PiOutput pi_step(const PiState& s, double reference, double measurement, const PiGains& g,
                        double dt, double output_limit) {
  if (!(dt > 0.0)) throw std::invalid_argument("pi_step: dt must be > 0");
  if (!(output_limit >= 0.0)) throw std::invalid_argument("pi_step: output limit must be >= 0");
  const double error = reference - measurement;
  const double candidate = s.integral + error * dt;
  const double raw = g.kp * error + g.ki * candidate;

  PiState next = s;
  const bool saturated = std::abs(raw) > output_limit;
  const bool winding = saturated && (raw > 0.0) == (error > 0.0) && error != 0.0;
  double u = raw;
  if (winding) {
    u = g.kp * error + g.ki * s.integral;
  } else {
    next.integral = candidate;
  }
  u = std::clamp(u, -output_limit, output_limit);
  next.last_output = u;
  return {next, u};
}

struct LpfState {
  double y = 0.0;
  double cutoff_hz = 1.0;
};

/// Smoothing factor of the discretized RC filter.
inline double lpf_alpha(double cutoff_hz, double dt) noexcept {
  const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
  return dt / (dt + rc);
}

inline LpfState lpf_step(const LpfState& s, double x, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("lpf_step: dt must be > 0");
  if (!(s.cutoff_hz > 0.0)) throw std::invalid_argument("lpf_step: cutoff_hz must be > 0");
  LpfState next = s;
  next.y = s.y + lpf_alpha(s.cutoff_hz, dt) * (x - s.y);
  return next;
}

/// Open-loop step response summarized as dead time L, time constant T and
/// process gain K.
struct ReactionCurve {
  double dead_time_s;
  double time_constant_s;
  double process_gain;
};

/// Ziegler-Nichols open-loop PI rule: kp = 0.9 T / (K L), Ti = L / 0.3, ki = kp / Ti.
inline PiGains zn_tune_pi(const ReactionCurve& c) {
  if (!(c.dead_time_s > 0.0) || !(c.time_constant_s > 0.0) || !(c.process_gain > 0.0)) {
    throw std::invalid_argument("zn_tune_pi: dead time, time constant and gain must be > 0");
  }
  const double kp = 0.9 * c.time_constant_s / (c.process_gain * c.dead_time_s);
  const double ti = c.dead_time_s / 0.3;
  return {kp, kp / ti};
}

}  // namespace diffbot

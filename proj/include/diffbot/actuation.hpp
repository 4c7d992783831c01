#pragma once

// Plant models: PWM-driven DC micromotor and quantized incremental encoder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <stdexcept>

namespace diffbot {

/// Static PWM -> speed calibration plus first-order lag.
///
/// The static map is odd in the PWM command and piecewise linear in |pwm|:
///
///   [0, deadband]              0                      (static friction)
///   (deadband, breakaway]      ramps up to breakaway * linear_gain
///   (breakaway, knee_pwm]      linear_gain * |pwm|
///   (knee_pwm, max_pwm]        knee + upper_gain * (|pwm| - knee_pwm)
///
/// where knee_pwm = linear_knee_radps / linear_gain. With the defaults this
/// gives 0 rad/s up to 20 PWM, 1 rad/s at 30 PWM, 6 rad/s at 180 PWM and
/// 2 rad/s per 30 PWM past the knee.
struct MotorParams {
  double deadband_pwm = 20.0;
  double breakaway_pwm = 30.0;
  double linear_gain = 1.0 / 30.0;  // rad/s per PWM count
  double linear_knee_radps = 6.0;
  double upper_gain = 2.0 / 30.0;  // rad/s per PWM count
  double max_pwm = 255.0;
  double tau_s = 0.15;

  double knee_pwm() const noexcept { return linear_knee_radps / linear_gain; }

  bool valid() const noexcept {
    return std::isfinite(deadband_pwm) && std::isfinite(breakaway_pwm) &&
           std::isfinite(max_pwm) && std::isfinite(tau_s) && deadband_pwm >= 0.0 &&
           deadband_pwm < breakaway_pwm && linear_gain > 0.0 && upper_gain > 0.0 &&
           linear_knee_radps > 0.0 && breakaway_pwm <= knee_pwm() && knee_pwm() <= max_pwm &&
           tau_s > 0.0;
  }
};

struct MotorState {
  double omega_radps = 0.0;
  double theta_rad = 0.0;  // unwrapped
};

inline void require_valid(const MotorParams& p) {
  if (!p.valid()) {
    throw std::invalid_argument(
        "MotorParams: need 0 <= deadband < breakaway <= knee <= max_pwm, positive gains, tau > 0");
  }
}

inline double steady_state_speed(double pwm, const MotorParams& p) noexcept {
  const double mag = std::min(std::abs(pwm), p.max_pwm);
  const double sign = pwm < 0.0 ? -1.0 : 1.0;
  const double knee_pwm = p.knee_pwm();
  double speed;
  if (mag <= p.deadband_pwm) {
    speed = 0.0;
  } else if (mag <= p.breakaway_pwm) {
    speed = p.linear_gain * p.breakaway_pwm * (mag - p.deadband_pwm) /
            (p.breakaway_pwm - p.deadband_pwm);
  } else if (mag <= knee_pwm) {
    speed = p.linear_gain * mag;
  } else {
    speed = p.linear_knee_radps + p.upper_gain * (mag - knee_pwm);
  }
  return sign * speed;
}

/// Smallest-magnitude PWM whose steady-state speed is `speed`; the inverse of
/// steady_state_speed outside the deadband. Speeds beyond the saturated
/// range map to +/-max_pwm; zero maps to zero.
inline double pwm_for_speed(double speed, const MotorParams& p) noexcept {
  const double mag = std::abs(speed);
  const double sign = speed < 0.0 ? -1.0 : 1.0;
  const double breakaway_speed = p.linear_gain * p.breakaway_pwm;
  const double knee_pwm = p.knee_pwm();
  double pwm;
  if (mag == 0.0) {
    pwm = 0.0;
  } else if (mag <= breakaway_speed) {
    pwm = p.deadband_pwm + (p.breakaway_pwm - p.deadband_pwm) * mag / breakaway_speed;
  } else if (mag <= p.linear_knee_radps) {
    pwm = mag / p.linear_gain;
  } else {
    pwm = knee_pwm + (mag - p.linear_knee_radps) / p.upper_gain;
  }
  return sign * std::min(pwm, p.max_pwm);
}

/// Fastest speed the motor can be commanded to at steady state.
inline double max_speed(const MotorParams& p) noexcept { return steady_state_speed(p.max_pwm, p); }

/// First-order lag toward the steady-state speed, then exact-hold angle update.
inline MotorState motor_step(const MotorState& s, double pwm, double dt, const MotorParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("motor_step: dt must be > 0");
  const double target = steady_state_speed(pwm, p);
  MotorState next;
  next.omega_radps = s.omega_radps + (dt / p.tau_s) * (target - s.omega_radps);
  next.theta_rad = s.theta_rad + next.omega_radps * dt;
  return next;
}

struct EncoderSample {
  double t_s;
  std::int64_t counts;
};

struct SpeedReading {
  double radps = 0.0;
  bool cold_start = false;  // history does not yet span the window
};

/// Incremental encoder at its net resolution (4X decoding folded into cpr).
class Encoder {
 public:
  explicit Encoder(int cpr = 48, std::size_t history_depth = 64) : cpr_(cpr), depth_(history_depth) {
    if (cpr <= 0) throw std::invalid_argument("Encoder: cpr must be > 0");
    if (history_depth < 2) throw std::invalid_argument("Encoder: history depth must be >= 2");
  }

  int cpr() const noexcept { return cpr_; }
  std::int64_t counts() const noexcept { return counts_; }
  double rad_per_count() const noexcept { return 2.0 * std::numbers::pi / cpr_; }
  const std::deque<EncoderSample>& history() const noexcept { return history_; }

  /// Count for a shaft angle: floor(theta / (2 pi / cpr)).
  static std::int64_t quantize(double theta_rad, int cpr) noexcept {
    return static_cast<std::int64_t>(std::floor(theta_rad / (2.0 * std::numbers::pi) * cpr));
  }

  void sample(double theta_rad, double t_s) {
    counts_ = quantize(theta_rad, cpr_);
    history_.push_back({t_s, counts_});
    while (history_.size() > depth_) history_.pop_front();
  }

  /// Speed from the count difference across the most recent `window_s`.
  /// Samples are assumed uniformly spaced; the oldest sample at least
  /// `window_s` old is used as the far edge.
  SpeedReading speed(double window_s) const {
    if (!(window_s > 0.0)) throw std::invalid_argument("Encoder::speed: window must be > 0");
    if (history_.size() < 2) return {0.0, true};
    const EncoderSample& newest = history_.back();
    // Tolerate floating-point drift in the time stamps.
    const double slack = 1e-9 * std::max(1.0, std::abs(newest.t_s));
    for (auto it = history_.rbegin() + 1; it != history_.rend(); ++it) {
      const double span = newest.t_s - it->t_s;
      if (span >= window_s - slack) {
        const auto delta = static_cast<double>(newest.counts - it->counts);
        return {delta * rad_per_count() / window_s, false};
      }
    }
    return {0.0, true};
  }

 private:
  int cpr_;
  std::size_t depth_;
  std::int64_t counts_ = 0;
  std::deque<EncoderSample> history_;
};

/// History depth that covers `window_s` at sampling period `ts_s`.
inline std::size_t history_depth_for(double window_s, double ts_s) {
  return static_cast<std::size_t>(std::ceil(window_s / ts_s - 1e-9)) + 2;
}

}  // namespace diffbot

#pragma once

// Closed-loop scenario engine.
//
// Each control period, per wheel:
//   reference  = inverse_kinematics(current plan twist)
//   measure    = windowed encoder speed + seeded Gaussian noise
//   estimate   = raw | low-pass | Kalman
//   control    = feedforward(reference) + PI(nominal response - estimate),
//                PWM 0 whenever the reference is exactly zero
//   actuate    = motor_step(PWM)
// then the true pose is integrated from the true wheel speeds and the
// odometry pose from the estimates.
//
// The PI acts on the deviation from the response a nominal motor would give
// (a first-order lag of the reference with the calibrated time constant).
// Its output is a wheel-speed correction in rad/s, added to the reference and
// converted to PWM through the inverse of the calibrated static motor map.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diffbot/actuation.hpp"
#include "diffbot/control.hpp"
#include "diffbot/estimation.hpp"
#include "diffbot/kinematics.hpp"

namespace diffbot {

struct Segment {
  double v_mps;
  double w_radps;
  double duration_s;
};

struct TrajectoryPlan {
  std::vector<Segment> segments;
  bool closed = false;  // nominal path returns to its start

  double duration() const noexcept {
    double total = 0.0;
    for (const auto& s : segments) total += s.duration_s;
    return total;
  }
};

enum class PlanKind { line, turn_in_place, circle, hexagon };

struct PlanParams {
  double v_mps = 0.1;
  double w_radps = 1.0;
  double duration_s = 5.0;  // line and turn_in_place
  double edge_m = 0.3;      // hexagon
};

inline TrajectoryPlan make_plan(PlanKind kind, const PlanParams& p) {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  TrajectoryPlan plan;
  switch (kind) {
    case PlanKind::line:
      if (!positive(p.duration_s)) throw std::invalid_argument("make_plan(line): duration must be > 0");
      plan.segments = {{p.v_mps, 0.0, p.duration_s}};
      break;
    case PlanKind::turn_in_place:
      if (!positive(p.duration_s)) throw std::invalid_argument("make_plan(turn): duration must be > 0");
      plan.segments = {{0.0, p.w_radps, p.duration_s}};
      break;
    case PlanKind::circle:
      if (!positive(std::abs(p.w_radps))) throw std::invalid_argument("make_plan(circle): w must be non-zero");
      plan.segments = {{p.v_mps, p.w_radps, 2.0 * std::numbers::pi / std::abs(p.w_radps)}};
      plan.closed = true;
      break;
    case PlanKind::hexagon: {
      if (!positive(p.v_mps) || !positive(p.edge_m) || !positive(std::abs(p.w_radps))) {
        throw std::invalid_argument("make_plan(hexagon): v, edge and |w| must be > 0");
      }
      const double edge_time = p.edge_m / p.v_mps;
      const double turn_time = (std::numbers::pi / 3.0) / std::abs(p.w_radps);
      for (int i = 0; i < 6; ++i) {
        plan.segments.push_back({p.v_mps, 0.0, edge_time});
        plan.segments.push_back({0.0, p.w_radps, turn_time});
      }
      plan.closed = true;
      break;
    }
  }
  return plan;
}

/// Replay of a recorded hexagon run as wheel-speed segments: three cycles of
/// straight (4 rad/s both wheels, 0.7 s), stop (0.25 s), slow left turn
/// (0.6 / -0.4 rad/s, 0.2 s), fast left turn (7.5 / 6.2 rad/s, 0.25 s),
/// then a final straight. The cycle does not describe a closed polygon.
inline TrajectoryPlan make_replay_plan(const RobotGeometry& geom) {
  auto seg = [&](double wr, double wl, double d) {
    const BodyTwist t = forward_kinematics({wr, wl}, geom);
    return Segment{t.v_mps, t.w_radps, d};
  };
  TrajectoryPlan plan;
  for (int i = 0; i < 3; ++i) {
    plan.segments.push_back(seg(4.0, 4.0, 0.7));
    plan.segments.push_back(seg(0.0, 0.0, 0.25));
    plan.segments.push_back(seg(0.6, -0.4, 0.2));
    plan.segments.push_back(seg(7.5, 6.2, 0.25));
  }
  plan.segments.push_back(seg(4.0, 4.0, 0.7));
  return plan;
}

enum class EstimatorMode { raw, lpf, kf };

inline std::string_view to_string(EstimatorMode m) noexcept {
  switch (m) {
    case EstimatorMode::raw: return "raw";
    case EstimatorMode::lpf: return "lpf";
    case EstimatorMode::kf: return "kf";
  }
  return "?";
}

inline std::optional<EstimatorMode> parse_estimator(std::string_view s) noexcept {
  if (s == "raw") return EstimatorMode::raw;
  if (s == "lpf") return EstimatorMode::lpf;
  if (s == "kf") return EstimatorMode::kf;
  return std::nullopt;
}

/// Per-wheel deviation of the physical motor from the calibrated model.
struct PlantMismatch {
  double gain_scale = 1.0;  // multiplies the static speed map
  double tau_scale = 1.0;   // multiplies the time constant
};

struct SimConfig {
  double ts_s = 0.002;
  EstimatorMode estimator_mode = EstimatorMode::kf;
  RobotGeometry geometry;
  MotorParams motor;  // calibrated model, used by feedforward and the filter
  PlantMismatch right_plant;
  PlantMismatch left_plant;
  int encoder_cpr = 48;
  PiGains gains = PiGains::initial();
  KalmanParams kalman;
  // When set, the filter's a and b are taken from the motor model:
  // a = 1 - ts / tau, b = ts / tau, with u the wheel-speed reference of the
  // previous period. The prediction is then the response of a calibrated
  // motor, and a gain error in the real motor cannot bias the estimate once
  // the loop has converged.
  bool kalman_follows_motor = true;
  std::optional<double> kalman_p0;  // defaults to w
  double lpf_cutoff_hz = 1.0;
  double speed_window_s = 0.05;
  double meas_noise_std = 0.5;
  std::uint64_t rng_seed = 0;
  double arena_m = 1.0;  // side of the square arena
  double run_length_s = 600.0;

  /// Filter parameters actually used by a run.
  KalmanParams effective_kalman() const noexcept {
    KalmanParams k = kalman;
    if (kalman_follows_motor) {
      k.a = 1.0 - ts_s / motor.tau_s;
      k.b = ts_s / motor.tau_s;
    }
    return k;
  }

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const {
    auto fail = [](const char* field, const char* why) {
      throw std::invalid_argument(std::string(field) + ": " + why);
    };
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(finite(ts_s) && ts_s > 0.0)) fail("ts_s", "must be > 0");
    if (!(finite(geometry.wheel_radius_m) && geometry.wheel_radius_m > 0.0)) fail("geometry.wheel_radius_m", "must be > 0");
    if (!(finite(geometry.axle_length_m) && geometry.axle_length_m > 0.0)) fail("geometry.axle_length_m", "must be > 0");
    if (!(finite(motor.deadband_pwm) && motor.deadband_pwm >= 0.0)) fail("motor.deadband_pwm", "must be >= 0");
    if (!(finite(motor.breakaway_pwm) && motor.breakaway_pwm > motor.deadband_pwm)) fail("motor.breakaway_pwm", "must exceed motor.deadband_pwm");
    if (!(finite(motor.linear_gain) && motor.linear_gain > 0.0)) fail("motor.linear_gain", "must be > 0");
    if (!(finite(motor.upper_gain) && motor.upper_gain > 0.0)) fail("motor.upper_gain", "must be > 0");
    if (!(finite(motor.linear_knee_radps) && motor.knee_pwm() >= motor.breakaway_pwm)) fail("motor.linear_knee_radps", "knee PWM must be >= motor.breakaway_pwm");
    if (!(finite(motor.max_pwm) && motor.max_pwm >= motor.knee_pwm())) fail("motor.max_pwm", "must be >= knee PWM");
    if (!(finite(motor.tau_s) && motor.tau_s > ts_s)) fail("motor.tau_s", "must exceed ts_s");
    if (!(finite(right_plant.gain_scale) && right_plant.gain_scale > 0.0)) fail("plant.right_gain_scale", "must be > 0");
    if (!(finite(left_plant.gain_scale) && left_plant.gain_scale > 0.0)) fail("plant.left_gain_scale", "must be > 0");
    if (!(finite(right_plant.tau_scale) && motor.tau_s * right_plant.tau_scale > ts_s)) fail("plant.right_tau_scale", "scaled tau must exceed ts_s");
    if (!(finite(left_plant.tau_scale) && motor.tau_s * left_plant.tau_scale > ts_s)) fail("plant.left_tau_scale", "scaled tau must exceed ts_s");
    if (encoder_cpr <= 0) fail("encoder.cpr", "must be > 0");
    if (!(finite(gains.kp) && gains.kp >= 0.0)) fail("gains.kp", "must be >= 0");
    if (!(finite(gains.ki) && gains.ki >= 0.0)) fail("gains.ki", "must be >= 0");
    if (!finite(kalman.a)) fail("kalman.a", "must be finite");
    if (!finite(kalman.b)) fail("kalman.b", "must be finite");
    if (!finite(kalman.c)) fail("kalman.c", "must be finite");
    if (!(finite(kalman.q) && kalman.q >= 0.0)) fail("kalman.q", "must be >= 0");
    if (!(finite(kalman.w) && kalman.w > 0.0)) fail("kalman.w", "must be > 0");
    if (kalman_p0 && !(finite(*kalman_p0) && *kalman_p0 > 0.0)) fail("kalman.p0", "must be > 0");
    if (!(finite(lpf_cutoff_hz) && lpf_cutoff_hz > 0.0)) fail("lpf.cutoff_hz", "must be > 0");
    if (!(finite(speed_window_s) && speed_window_s >= ts_s)) fail("encoder.speed_window_s", "must be >= ts_s");
    if (!(finite(meas_noise_std) && meas_noise_std >= 0.0)) fail("noise.meas_std", "must be >= 0");
    if (!(finite(arena_m) && arena_m > 0.0)) fail("arena_m", "must be > 0");
    if (!(finite(run_length_s) && run_length_s > 0.0)) fail("run_length_s", "must be > 0");
  }
};

struct TraceRow {
  double t;  // control instant; plant columns hold the state at the end of the period
  WheelSpeeds ref;
  WheelSpeeds truth;
  WheelSpeeds meas;
  WheelSpeeds est;
  double pwm_r;
  double pwm_l;
  Pose pose;
  Pose odom;
};

struct SimTrace {
  double ts_s = 0.0;
  EstimatorMode mode = EstimatorMode::kf;
  bool closed_plan = false;
  Pose start;
  std::vector<TraceRow> rows;
};

/// Number of control periods covering `duration_s`.
inline std::size_t step_count(double duration_s, double ts_s) {
  return static_cast<std::size_t>(std::ceil(duration_s / ts_s - 1e-9));
}

namespace detail {

class WheelLoop {
 public:
  WheelLoop(const SimConfig& cfg, const PlantMismatch& mismatch)
      : cfg_(cfg),
        plant_(cfg.motor),
        kalman_(cfg.effective_kalman()),
        encoder_(cfg.encoder_cpr, history_depth_for(cfg.speed_window_s, cfg.ts_s)),
        pi_limit_(max_speed(cfg.motor)) {
    // Scaling all three slopes scales the whole static map.
    plant_.tau_s *= mismatch.tau_scale;
    plant_.linear_gain *= mismatch.gain_scale;
    plant_.upper_gain *= mismatch.gain_scale;
    plant_.linear_knee_radps *= mismatch.gain_scale;
    lpf_.cutoff_hz = cfg.lpf_cutoff_hz;
  }

  /// Encoder reading at time t (before this period's actuation).
  double measure(double t, double noise) {
    encoder_.sample(motor_.theta_rad, t);
    return encoder_.speed(cfg_.speed_window_s).radps + noise;
  }

  double estimate(double measurement) {
    switch (cfg_.estimator_mode) {
      case EstimatorMode::raw:
        return measurement;
      case EstimatorMode::lpf:
        lpf_ = lpf_step(lpf_, measurement, cfg_.ts_s);
        return lpf_.y;
      case EstimatorMode::kf:
        if (!kf_started_) {
          kf_ = {measurement, cfg_.kalman_p0.value_or(kalman_.w)};
          kf_started_ = true;
        } else {
          kf_ = kf_step(kf_, last_ref_, measurement, kalman_).state;
        }
        return kf_.x_hat;
    }
    return measurement;
  }

  double control(double reference, double estimate) {
    nominal_ += (cfg_.ts_s / cfg_.motor.tau_s) * (reference - nominal_);
    last_ref_ = reference;
    if (reference == 0.0) {
      // A stop command drops the drive entirely instead of chasing noise
      // around zero inside the deadband.
      pi_ = {};
      return 0.0;
    }
    auto [state, correction] = pi_step(pi_, nominal_, estimate, cfg_.gains, cfg_.ts_s, pi_limit_);
    pi_ = state;
    const double pwm = pwm_for_speed(reference + correction, cfg_.motor);
    return std::clamp(pwm, -cfg_.motor.max_pwm, cfg_.motor.max_pwm);
  }

  double actuate(double pwm) {
    motor_ = motor_step(motor_, pwm, cfg_.ts_s, plant_);
    return motor_.omega_radps;
  }

  const PiState& pi() const noexcept { return pi_; }

 private:
  const SimConfig& cfg_;
  MotorParams plant_;  // the physical motor, possibly off-calibration
  KalmanParams kalman_;
  Encoder encoder_;
  double pi_limit_;
  MotorState motor_;
  LpfState lpf_;
  KalmanState kf_;
  bool kf_started_ = false;
  PiState pi_;
  double nominal_ = 0.0;
  double last_ref_ = 0.0;
};

}  // namespace detail

/// Runs `plan` in closed loop. Identical config, plan and seed give a
/// bit-identical trace.
inline SimTrace simulate_run(const SimConfig& cfg, const TrajectoryPlan& plan) {
  cfg.validate();
  if (plan.segments.empty()) throw std::invalid_argument("simulate_run: plan is empty");
  for (const auto& s : plan.segments) {
    if (!(std::isfinite(s.duration_s) && s.duration_s > 0.0) || !std::isfinite(s.v_mps) ||
        !std::isfinite(s.w_radps)) {
      throw std::invalid_argument("simulate_run: segment durations must be > 0 and speeds finite");
    }
  }
  const double total = plan.duration();
  if (total > cfg.run_length_s) {
    throw std::invalid_argument("simulate_run: plan duration exceeds run_length_s");
  }

  const double ts = cfg.ts_s;
  const std::size_t n = step_count(total, ts);

  // Step index at which each segment ends.
  std::vector<std::size_t> seg_end;
  double cum = 0.0;
  for (const auto& s : plan.segments) {
    cum += s.duration_s;
    seg_end.push_back(step_count(cum, ts));
  }
  std::vector<WheelSpeeds> seg_wheels;
  for (const auto& s : plan.segments) {
    seg_wheels.push_back(inverse_kinematics({s.v_mps, s.w_radps}, cfg.geometry));
  }

  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  detail::WheelLoop right(cfg, cfg.right_plant);
  detail::WheelLoop left(cfg, cfg.left_plant);

  SimTrace trace;
  trace.ts_s = ts;
  trace.mode = cfg.estimator_mode;
  trace.closed_plan = plan.closed;
  trace.rows.reserve(n);

  Pose pose;
  Pose odom;
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (seg + 1 < seg_wheels.size() && k >= seg_end[seg]) ++seg;
    const double t = static_cast<double>(k) * ts;
    const WheelSpeeds ref = seg_wheels[seg];

    TraceRow row{};
    row.t = t;
    row.ref = ref;

    const double noise_r = cfg.meas_noise_std * noise(rng);
    const double noise_l = cfg.meas_noise_std * noise(rng);
    row.meas = {right.measure(t, noise_r), left.measure(t, noise_l)};
    row.est = {right.estimate(row.meas.wr_radps), left.estimate(row.meas.wl_radps)};
    row.pwm_r = right.control(ref.wr_radps, row.est.wr_radps);
    row.pwm_l = left.control(ref.wl_radps, row.est.wl_radps);
    row.truth = {right.actuate(row.pwm_r), left.actuate(row.pwm_l)};

    pose = integrate_pose(pose, forward_kinematics(row.truth, cfg.geometry), ts);
    odom = integrate_pose(odom, forward_kinematics(row.est, cfg.geometry), ts);
    row.pose = pose;
    row.odom = odom;
    trace.rows.push_back(row);
  }
  return trace;
}

struct TrackingMetrics {
  std::optional<double> settling_r_s;
  std::optional<double> settling_l_s;
  double rms_speed_error = 0.0;  // estimate vs reference, both wheels
  double final_pose_error_m = 0.0;
  double path_closure_m = 0.0;
};

inline constexpr double kSettlingBand = 0.05;
inline constexpr double kSettlingHold_s = 0.2;

/// First control instant from which `value` stays within +/-5% of `reference`
/// for at least 0.2 s; nullopt if that never happens.
template <typename Value, typename Reference>
std::optional<double> settling_time(const SimTrace& trace, Value value, Reference reference) {
  const auto hold = static_cast<std::size_t>(std::llround(kSettlingHold_s / trace.ts_s));
  std::size_t run = 0;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const double r = reference(trace.rows[i]);
    const bool in_band = std::abs(value(trace.rows[i]) - r) <= kSettlingBand * std::abs(r);
    run = in_band ? run + 1 : 0;
    if (run >= hold) return trace.rows[i + 1 - run].t - trace.rows.front().t;
  }
  return std::nullopt;
}

inline TrackingMetrics compute_metrics(const SimTrace& trace) {
  if (trace.rows.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  TrackingMetrics m;
  m.settling_r_s = settling_time(
      trace, [](const TraceRow& r) { return r.est.wr_radps; },
      [](const TraceRow& r) { return r.ref.wr_radps; });
  m.settling_l_s = settling_time(
      trace, [](const TraceRow& r) { return r.est.wl_radps; },
      [](const TraceRow& r) { return r.ref.wl_radps; });

  double sum_sq = 0.0;
  for (const auto& r : trace.rows) {
    const double er = r.est.wr_radps - r.ref.wr_radps;
    const double el = r.est.wl_radps - r.ref.wl_radps;
    sum_sq += er * er + el * el;
  }
  m.rms_speed_error = std::sqrt(sum_sq / (2.0 * static_cast<double>(trace.rows.size())));

  const TraceRow& last = trace.rows.back();
  m.final_pose_error_m = distance(last.pose, last.odom);
  m.path_closure_m = distance(last.pose, trace.start);
  return m;
}

/// Slower of the two wheels; nullopt if either never settles.
inline std::optional<double> worst_settling(const TrackingMetrics& m) {
  if (!m.settling_r_s || !m.settling_l_s) return std::nullopt;
  return std::max(*m.settling_r_s, *m.settling_l_s);
}

/// Pose path of the plan followed exactly, at the same step as the simulator.
inline std::vector<Pose> nominal_path(const TrajectoryPlan& plan, double ts_s) {
  std::vector<Pose> path;
  Pose pose;
  double cum = 0.0;
  std::size_t k = 0;
  for (const auto& s : plan.segments) {
    cum += s.duration_s;
    const std::size_t end = step_count(cum, ts_s);
    for (; k < end; ++k) {
      pose = integrate_pose(pose, {s.v_mps, s.w_radps}, ts_s);
      path.push_back(pose);
    }
  }
  return path;
}

struct Extent {
  double min_x, max_x, min_y, max_y;
  double width() const noexcept { return max_x - min_x; }
  double height() const noexcept { return max_y - min_y; }
};

/// Bounding box of the true path, including the start pose.
inline Extent path_extent(const SimTrace& trace) {
  Extent e{trace.start.x_m, trace.start.x_m, trace.start.y_m, trace.start.y_m};
  for (const auto& r : trace.rows) {
    e.min_x = std::min(e.min_x, r.pose.x_m);
    e.max_x = std::max(e.max_x, r.pose.x_m);
    e.min_y = std::min(e.min_y, r.pose.y_m);
    e.max_y = std::max(e.max_y, r.pose.y_m);
  }
  return e;
}

/// True path fits in a square arena of side `arena_m`.
inline bool fits_arena(const SimTrace& trace, double arena_m) {
  const Extent e = path_extent(trace);
  return e.width() <= arena_m && e.height() <= arena_m;
}

}  // namespace diffbot

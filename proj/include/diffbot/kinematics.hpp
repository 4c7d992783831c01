#pragma once

// Differential-drive kinematics: wheel space <-> body space <-> world space.
//
// Conventions:
//   right wheel first, left wheel second
//   positive angular speed turns the robot counter-clockwise (to the left)
//   heading is kept in (-pi, pi]

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffbot {

struct RobotGeometry {
  double wheel_radius_m = 0.021;  // 42 mm Pololu wheel
  double axle_length_m = 0.09;

  bool valid() const noexcept {
    return std::isfinite(wheel_radius_m) && std::isfinite(axle_length_m) &&
           wheel_radius_m > 0.0 && axle_length_m > 0.0;
  }
};

struct Pose {
  double x_m = 0.0;
  double y_m = 0.0;
  double phi_rad = 0.0;
};

struct BodyTwist {
  double v_mps = 0.0;
  double w_radps = 0.0;
};

struct WheelSpeeds {
  double wr_radps = 0.0;
  double wl_radps = 0.0;
};

struct PoseRate {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double phi_dot = 0.0;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) noexcept {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  a = std::fmod(a, two_pi);  // (-2pi, 2pi)
  if (a > pi) a -= two_pi;
  if (a <= -pi) a += two_pi;
  return a;
}

inline void require_valid(const RobotGeometry& geom) {
  if (!geom.valid()) {
    throw std::invalid_argument("RobotGeometry: wheel_radius_m and axle_length_m must be > 0");
  }
}

/// Body twist produced by a pair of wheel speeds.
///   v = R (wr + wl) / 2
///   w = R (wr - wl) / l
inline BodyTwist forward_kinematics(const WheelSpeeds& wheels, const RobotGeometry& geom) {
  require_valid(geom);
  const double r = geom.wheel_radius_m;
  return {r * (wheels.wr_radps + wheels.wl_radps) / 2.0,
          r * (wheels.wr_radps - wheels.wl_radps) / geom.axle_length_m};
}

/// Wheel speeds needed for a body twist. Exact inverse of forward_kinematics.
inline WheelSpeeds inverse_kinematics(const BodyTwist& twist, const RobotGeometry& geom) {
  require_valid(geom);
  const double half_turn = twist.w_radps * geom.axle_length_m / 2.0;
  return {(twist.v_mps + half_turn) / geom.wheel_radius_m,
          (twist.v_mps - half_turn) / geom.wheel_radius_m};
}

inline PoseRate pose_rate(const Pose& pose, const BodyTwist& twist) noexcept {
  return {twist.v_mps * std::cos(pose.phi_rad), twist.v_mps * std::sin(pose.phi_rad),
          twist.w_radps};
}

/// One explicit-Euler step of the unicycle model.
inline Pose integrate_pose(const Pose& pose, const BodyTwist& twist, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_pose: dt must be > 0");
  const PoseRate rate = pose_rate(pose, twist);
  return {pose.x_m + rate.x_dot * dt, pose.y_m + rate.y_dot * dt,
          wrap_angle(pose.phi_rad + rate.phi_dot * dt)};
}

inline double distance(const Pose& a, const Pose& b) noexcept {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

}  // namespace diffbot

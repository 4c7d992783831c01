#pragma once

// Scalar discrete-time Kalman filter for one wheel's angular speed.
//
//   state:        x[k+1] = a x[k] + b u[k] + process noise (variance q)
//   measurement:  y[k]   = c x[k] + measurement noise (variance w)

#include <cmath>
#include <stdexcept>

namespace diffbot {

struct KalmanParams {
  double a = 1.0;
  double c = 1.0;
  double q = 1e-3;
  double w = 2.0;
  double b = 0.0;

  bool valid() const noexcept {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(q) &&
           std::isfinite(w) && q >= 0.0 && w > 0.0;
  }
};

struct KalmanState {
  double x_hat = 0.0;
  double p = 1.0;
};

struct KalmanUpdate {
  KalmanState state;
  double gain;
};

inline KalmanState kf_predict(const KalmanState& s, double u, const KalmanParams& k) noexcept {
  return {k.a * s.x_hat + k.b * u, k.a * k.a * s.p + k.q};
}

inline KalmanUpdate kf_update(const KalmanState& prior, double y, const KalmanParams& k) {
  if (!(k.w > 0.0)) throw std::invalid_argument("kf_update: measurement variance w must be > 0");
  const double gain = prior.p * k.c / (k.c * k.c * prior.p + k.w);
  KalmanState post;
  post.x_hat = prior.x_hat + gain * (y - k.c * prior.x_hat);
  post.p = (1.0 - gain * k.c) * prior.p;
  return {post, gain};
}

/// Predict with input u, then correct with measurement y.
inline KalmanUpdate kf_step(const KalmanState& s, double u, double y, const KalmanParams& k) {
  return kf_update(kf_predict(s, u, k), y, k);
}

struct SteadyState {
  double prior_p;      // variance after predict
  double posterior_p;  // variance after update
  double gain;
};

/// Closed-form fixed point of the scalar Riccati recursion.
///
/// The prior variance m solves c^2 m^2 + (w (1 - a^2) - q c^2) m - q w = 0;
/// the positive root is taken in whichever form avoids cancellation.
inline SteadyState steady_state(const KalmanParams& k) {
  if (!k.valid()) throw std::invalid_argument("steady_state: invalid Kalman parameters");
  const double c2 = k.c * k.c;
  double m;
  if (c2 == 0.0) {
    if (std::abs(k.a) >= 1.0) throw std::domain_error("steady_state: unobservable and unstable");
    m = k.q / (1.0 - k.a * k.a);
  } else {
    const double lin = k.w * (1.0 - k.a * k.a) - k.q * c2;
    const double root = std::sqrt(lin * lin + 4.0 * c2 * k.q * k.w);
    m = lin > 0.0 ? 2.0 * k.q * k.w / (lin + root) : (root - lin) / (2.0 * c2);
  }
  const double gain = m * k.c / (c2 * m + k.w);
  return {m, (1.0 - gain * k.c) * m, gain};
}

}  // namespace diffbot

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mavtrack/rng.hpp"
#include "mavtrack/types.hpp"

namespace mavtrack {

/// Physical parameters of the tracker vehicle.
template <typename T>
struct VehicleParams {
  T mass = T(1);
  Mat3<T> inertia = Vec3<T>(T(0.0030), T(0.0045), T(0.0028)).asDiagonal();
  Vec3<T> gravity = Vec3<T>(T(0), T(0), T(9.8));
  Mat3<T> drag = Vec3<T>(T(0.3), T(0.3), T(0.15)).asDiagonal();
  T thrust_gain = T(20);    // first-order thrust loop, 1/s
  T rate_gain = T(0.06);    // body-rate loop torque gain, N*m*s/rad
  T thrust_min = T(0.1);
  T thrust_max = T(20.1);
  T rate_limit = T(4);      // symmetric per-axis body-rate limit, rad/s

  void validate() const {
    if (!(mass > T(0))) throw std::invalid_argument("VehicleParams: mass must be positive");
    if (!inertia.isApprox(inertia.transpose(), T(1e-9)))
      throw std::invalid_argument("VehicleParams: inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3<T>> es(inertia);
    if (es.eigenvalues().minCoeff() <= T(0))
      throw std::invalid_argument("VehicleParams: inertia must be positive definite");
    if (!(thrust_min >= T(0)) || !(thrust_max > thrust_min))
      throw std::invalid_argument("VehicleParams: thrust limits must satisfy 0 <= min < max");
    if (!(rate_limit > T(0))) throw std::invalid_argument("VehicleParams: rate limit must be positive");
    if (!(thrust_gain > T(0)) || !(rate_gain > T(0)))
      throw std::invalid_argument("VehicleParams: actuator gains must be positive");
  }
};

using VehicleParamsd = VehicleParams<double>;

template <typename T>
Command<T> saturate(const Command<T>& cmd, const VehicleParams<T>& params) {
  Command<T> out;
  out.thrust = std::clamp(cmd.thrust, params.thrust_min, params.thrust_max);
  for (int i = 0; i < 3; ++i)
    out.rates[i] = std::clamp(cmd.rates[i], -params.rate_limit, params.rate_limit);
  return out;
}

/// Affine map of a saturated command onto [-1,1]^4 (thrust, then rates).
template <typename T>
Vec4<T> normalize_command(const Command<T>& cmd, const VehicleParams<T>& params) {
  Vec4<T> u;
  u(0) = (T(2) * cmd.thrust - (params.thrust_min + params.thrust_max)) /
         (params.thrust_max - params.thrust_min);
  u.template tail<3>() = cmd.rates / params.rate_limit;
  return u;
}

namespace detail {

template <typename T>
void require_step_inputs(bool finite_state, const Command<T>& cmd, T dt, const char* who) {
  if (!(dt > T(0))) throw std::invalid_argument(std::string(who) + ": dt must be positive");
  if (!finite_state) throw std::invalid_argument(std::string(who) + ": non-finite state");
  if (!is_finite(cmd)) throw std::invalid_argument(std::string(who) + ": non-finite command");
}

}  // namespace detail

// One zero-order-hold step of the thrust/body-rate model
//   p_dd = (f/m) R3 - g,   R_dot = R [omega]x .
// Held inputs make the attitude advance an exact exponential, and the
// translational part is integrated with classical RK4 sampling the exact
// attitude at the stage times.
template <typename T>
VehicleState<T> step_simple(const VehicleState<T>& s, const Command<T>& cmd_in,
                            const VehicleParams<T>& params, T dt) {
  detail::require_step_inputs(is_finite(s), cmd_in, dt, "step_simple");
  const Command<T> cmd = saturate(cmd_in, params);
  const T a_scale = cmd.thrust / params.mass;
  const auto accel = [&](T tau) -> Vec3<T> {
    const Quat<T> q_tau = s.q * quat_exp<T>(cmd.rates * tau);
    return a_scale * thrust_axis(q_tau) - params.gravity;
  };
  const Vec3<T> a0 = accel(T(0));
  const Vec3<T> am = accel(dt / T(2));
  const Vec3<T> a1 = accel(dt);

  VehicleState<T> out;
  out.p = s.p + dt * s.v + dt * dt / T(6) * (a0 + T(2) * am);
  out.v = s.v + dt / T(6) * (a0 + T(4) * am + a1);
  out.q = (s.q * quat_exp<T>(cmd.rates * dt)).normalized();
  return out;
}

// One zero-order-hold step of the augmented model
//   p_dd    = (R3 f - K_v p_d) / m - g
//   R_dot   = R [omega]x
//   w_dot   = J^-1 (k_w (w_cmd - w) - w x J w)
//   f_dot   = k_f (f_cmd - f)
// RK4 over (p, v, theta, omega) in the rotation-vector chart, with the
// linear thrust lag integrated in closed form so arbitrarily stiff gains
// stay exact. Substeps keep h * max(k_f, k_w ||J^-1||) bounded, which also
// keeps the rate loop inside the RK4 stability region for large gains.
template <typename T>
AugmentedVehicleState<T> step_augmented(const AugmentedVehicleState<T>& s, const Command<T>& cmd_in,
                                        const VehicleParams<T>& params, T dt) {
  detail::require_step_inputs(is_finite(s), cmd_in, dt, "step_augmented");
  const Command<T> cmd = saturate(cmd_in, params);
  const Mat3<T> inertia_inv = params.inertia.inverse();
  const T stiffness = std::max(params.thrust_gain,
                               params.rate_gain * inertia_inv.cwiseAbs().maxCoeff());
  const int nsub = std::max(1, static_cast<int>(std::ceil(dt * stiffness / T(0.5))));
  const T h = dt / T(nsub);

  Vec3<T> p = s.base.p;
  Vec3<T> v = s.base.v;
  Quat<T> q = s.base.q;
  Vec3<T> w = s.omega;
  T f0 = s.f;

  struct Deriv {
    Vec3<T> dp, dv, dth, dw;
  };

  for (int sub = 0; sub < nsub; ++sub) {
    const auto thrust_at = [&](T tau) { return cmd.thrust + (f0 - cmd.thrust) * std::exp(-params.thrust_gain * tau); };
    const auto rhs = [&](T tau, const Vec3<T>& vv, const Vec3<T>& th, const Vec3<T>& ww) -> Deriv {
      const Quat<T> q_tau = q * quat_exp<T>(th);
      Deriv d;
      d.dp = vv;
      d.dv = (thrust_axis(q_tau) * thrust_at(tau) - params.drag * vv) / params.mass - params.gravity;
      d.dth = rotvec_rate<T>(th, ww);
      d.dw = inertia_inv * (params.rate_gain * (cmd.rates - ww) - ww.cross(params.inertia * ww));
      return d;
    };

    const Vec3<T> th0 = Vec3<T>::Zero();
    const Deriv k1 = rhs(T(0), v, th0, w);
    const Deriv k2 = rhs(h / T(2), v + h / T(2) * k1.dv, th0 + h / T(2) * k1.dth, w + h / T(2) * k1.dw);
    const Deriv k3 = rhs(h / T(2), v + h / T(2) * k2.dv, th0 + h / T(2) * k2.dth, w + h / T(2) * k2.dw);
    const Deriv k4 = rhs(h, v + h * k3.dv, th0 + h * k3.dth, w + h * k3.dw);

    p += h / T(6) * (k1.dp + T(2) * k2.dp + T(2) * k3.dp + k4.dp);
    v += h / T(6) * (k1.dv + T(2) * k2.dv + T(2) * k3.dv + k4.dv);
    const Vec3<T> th_end = h / T(6) * (k1.dth + T(2) * k2.dth + T(2) * k3.dth + k4.dth);
    w += h / T(6) * (k1.dw + T(2) * k2.dw + T(2) * k3.dw + k4.dw);
    q = (q * quat_exp<T>(th_end)).normalized();
    f0 = thrust_at(h);
  }

  AugmentedVehicleState<T> out;
  out.base.p = p;
  out.base.v = v;
  out.base.q = q;
  out.omega = w;
  out.f = f0;
  return out;
}

/// World-frame acceleration from the simple-model right-hand side at the
/// given realized thrust.
template <typename T>
Vec3<T> body_acceleration(const VehicleState<T>& s, T realized_thrust, const VehicleParams<T>& params) {
  return thrust_axis(s.q) * realized_thrust / params.mass - params.gravity;
}

/// World-frame acceleration from the augmented-model right-hand side.
template <typename T>
Vec3<T> body_acceleration(const AugmentedVehicleState<T>& s, const VehicleParams<T>& params) {
  return (thrust_axis(s.base.q) * s.f - params.drag * s.base.v) / params.mass - params.gravity;
}

template <typename T>
struct RandomizationConfig {
  T fraction = T(0.1);          // +/- band applied to m, J, |g|, K_v
  T max_settling_time = T(0.25);  // cap on the thrust-loop 2% settling time 4/k_f
};

// Per-episode physical randomization. m, diag(J), |g| and diag(K_v) scale
// uniformly within +/-fraction. The actuator loops only slow down (delays),
// with the thrust-loop settling time clamped at max_settling_time.
// fraction <= 0 returns the nominal set unchanged.
template <typename T>
VehicleParams<T> randomize_params(const VehicleParams<T>& nominal, const RandomizationConfig<T>& cfg,
                                  RngStream& rng) {
  if (!(cfg.fraction > T(0))) return nominal;
  const T lo = T(1) - cfg.fraction;
  const T hi = T(1) + cfg.fraction;
  auto factor = [&] { return static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi))); };

  VehicleParams<T> out = nominal;
  out.mass *= factor();
  for (int i = 0; i < 3; ++i) out.inertia(i, i) *= factor();
  out.gravity *= factor();
  for (int i = 0; i < 3; ++i) out.drag(i, i) *= factor();

  const T kf_floor = T(4) / cfg.max_settling_time;
  const T kf_lo = std::min(nominal.thrust_gain, std::max(kf_floor, lo * nominal.thrust_gain));
  out.thrust_gain = static_cast<T>(rng.uniform(static_cast<double>(kf_lo), static_cast<double>(nominal.thrust_gain)));
  out.rate_gain = static_cast<T>(rng.uniform(static_cast<double>(lo * nominal.rate_gain),
                                             static_cast<double>(nominal.rate_gain)));
  return out;
}

}  // namespace mavtrack

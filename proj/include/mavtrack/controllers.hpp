#pragma once

#include <optional>
#include <utility>

#include "mavtrack/dynamics.hpp"
#include "mavtrack/perception.hpp"
#include "mavtrack/riccati.hpp"

namespace mavtrack {

// ---------------------------------------------------------------------------
// Feedback-linearization LQG
// ---------------------------------------------------------------------------

template <typename T>
struct LqrWeights {
  T position = T(25);
  T velocity = T(4);
  T effort = T(1);
};

template <typename T>
struct LqgConfig {
  LqrWeights<T> weights;
  T process_accel_var = T(1);     // white relative-acceleration driving noise, (m/s^2)^2
  T meas_position_var = T(1e-4);  // box-derived position measurement variance, m^2
  T attitude_gain = T(6);         // proportional SO(3) attitude loop, 1/s
  T distance_setpoint = T(0.5);
  T target_radius = T(0.15);
  bool drag_compensation = true;
  VehicleParams<T> vehicle;       // nominal parameters only; the plant may differ
  T dt = T(0.02);
};

template <typename T>
struct LqgDesign {
  Mat2<T> A;
  Vec2<T> B;
  Eigen::Matrix<T, 1, 2> K;      // LQR gain per world axis
  Mat2<T> W;                     // process noise per axis
  T V = T(0);                    // measurement variance
  Vec2<T> L;                     // steady-state predictor gain (diagnostic)
  T control_radius = T(0);       // spectral radius of A - BK
  T estimator_radius = T(0);     // spectral radius of A - LC
};

// Per-axis double integrator in the relative position driven by the tracker
// acceleration; gains from the Riccati solution, estimator from the dual.
template <typename T>
LqgDesign<T> design_lqg(const LqgConfig<T>& cfg) {
  const T dt = cfg.dt;
  LqgDesign<T> d;
  d.A << T(1), dt, T(0), T(1);
  d.B << dt * dt / T(2), dt;
  d.W = cfg.process_accel_var * (d.B * d.B.transpose());
  d.V = cfg.meas_position_var;

  MatX<T> A = d.A, B = d.B, Q = MatX<T>::Zero(2, 2), R = MatX<T>::Identity(1, 1);
  Q(0, 0) = cfg.weights.position;
  Q(1, 1) = cfg.weights.velocity;
  R(0, 0) = cfg.weights.effort;
  const DareSolution<T> lqr = dare_solve<T>(A, B, Q, R);
  d.K = lqr.K;
  d.control_radius = spectral_radius<T>(A - B * MatX<T>(d.K));

  MatX<T> C = MatX<T>::Zero(1, 2);
  C(0, 0) = T(1);
  const KalmanDesign<T> kal = steady_state_kalman<T>(A, C, MatX<T>(d.W), d.V * MatX<T>::Identity(1, 1));
  d.L = kal.L;
  d.estimator_radius = spectral_radius<T>(A - MatX<T>(d.L) * C);
  return d;
}

template <typename T>
struct LqgController {
  LqgConfig<T> cfg;
  LqgDesign<T> design;
  CameraModel<T> camera;
};

template <typename T>
LqgController<T> make_lqg(const LqgConfig<T>& cfg, const CameraModel<T>& camera) {
  return LqgController<T>{cfg, design_lqg(cfg), camera};
}

/// Kalman filter memory: per-world-axis [relative position; relative
/// velocity] estimates sharing one covariance (axes are measured together).
template <typename T>
struct LqgMemory {
  bool initialized = false;
  Eigen::Matrix<T, 2, 3> state = Eigen::Matrix<T, 2, 3>::Zero();
  Mat2<T> cov = Mat2<T>::Zero();
  Vec3<T> last_accel = Vec3<T>::Zero();  // tracker acceleration applied at the previous step
};

namespace detail {

// Inverts the thrust-attitude map: desired acceleration -> thrust magnitude
// plus a proportional SO(3) rotation toward the desired thrust axis, with
// the yaw component steering the optical axis onto the horizontal bearing.
template <typename T>
Command<T> accel_to_command(const Vec3<T>& accel_des, const Vec3<T>& e_world, const Vec3<T>& edot_world,
                            const Quat<T>& attitude, const LqgConfig<T>& cfg) {
  const VehicleParams<T>& veh = cfg.vehicle;
  Vec3<T> f_des = veh.mass * (accel_des + veh.gravity);
  if (cfg.drag_compensation) f_des -= veh.drag * edot_world;  // tracker velocity ~ -relative velocity
  Command<T> cmd;
  cmd.thrust = f_des.norm();

  Vec3<T> z_des = cmd.thrust > T(1e-9) ? Vec3<T>(f_des / cmd.thrust) : thrust_axis(attitude);
  const T yaw_des = std::atan2(e_world.y(), e_world.x());
  Vec3<T> x_heading(std::cos(yaw_des), std::sin(yaw_des), T(0));
  Vec3<T> y_des = z_des.cross(x_heading);
  if (y_des.norm() < T(1e-6)) y_des = z_des.cross(Vec3<T>::UnitX());  // bearing parallel to thrust axis
  y_des.normalize();
  Mat3<T> r_des;
  r_des.col(0) = y_des.cross(z_des);
  r_des.col(1) = y_des;
  r_des.col(2) = z_des;

  const Quat<T> q_err = attitude.conjugate() * Quat<T>(r_des);
  cmd.rates = cfg.attitude_gain * quat_log<T>(q_err);
  return saturate(cmd, veh);
}

template <typename T>
Command<T> lqg_control_law(const Vec3<T>& e_world, const Vec3<T>& edot_world, const Quat<T>& attitude,
                           const LqgController<T>& ctl, Vec3<T>* accel_out) {
  const Vec3<T> e_des = attitude * Vec3<T>(ctl.cfg.distance_setpoint, T(0), T(0));
  const Vec3<T> accel_des = ctl.design.K(0, 0) * (e_world - e_des) + ctl.design.K(0, 1) * edot_world;
  if (accel_out) *accel_out = accel_des;
  return accel_to_command(accel_des, e_world, edot_world, attitude, ctl.cfg);
}

}  // namespace detail

// Vision-fed LQG step: bounding box -> relative position pseudo-measurement
// (rotated to world by the privileged attitude), per-axis Kalman
// predict/update (predict only on a miss), LQR relative acceleration, and
// feedback linearization back to thrust and body rates.
template <typename T>
std::pair<Command<T>, LqgMemory<T>> lqg_step(const LqgController<T>& ctl, LqgMemory<T> mem,
                                             const std::optional<BBox<std::type_identity_t<T>>>& box,
                                             const Quat<T>& attitude, T dt) {
  if (!is_finite(attitude)) throw std::invalid_argument("lqg_step: attitude required");
  if (!mem.initialized && !box) throw std::logic_error("lqg_step: estimator not initialized and no detection");
  (void)dt;  // the filter runs at the design rate cfg.dt

  const LqgDesign<T>& d = ctl.design;
  if (mem.initialized) {
    // predict with the previously applied tracker acceleration as input
    mem.state = d.A * mem.state - d.B * mem.last_accel.transpose();
    mem.cov = d.A * mem.cov * d.A.transpose() + d.W;
  }
  if (box) {
    const Vec3<T> y_meas = estimate_relative(*box, ctl.camera, ctl.cfg.target_radius);
    const Vec3<T> e_meas = attitude * y_meas;
    if (!mem.initialized) {
      mem.initialized = true;
      mem.state.row(0) = e_meas.transpose();
      mem.state.row(1).setZero();
      mem.cov = Vec2<T>(T(0.25), T(1)).asDiagonal();
    } else {
      const T s = mem.cov(0, 0) + d.V;
      const Vec2<T> gain = mem.cov.col(0) / s;
      mem.state += gain * (e_meas.transpose() - mem.state.row(0));
      mem.cov = (Mat2<T>::Identity() - gain * Eigen::Matrix<T, 1, 2>::Unit(0)) * mem.cov;
    }
  }

  Vec3<T> accel_des;
  const Command<T> cmd = detail::lqg_control_law<T>(mem.state.row(0).transpose(), mem.state.row(1).transpose(),
                                                    attitude, ctl, &accel_des);
  mem.last_accel = accel_des;
  return {cmd, std::move(mem)};
}

/// Privileged variant: the same control law fed by ground-truth relative
/// state; no estimator.
template <typename T>
Command<T> privileged_lqg_step(const LqgController<T>& ctl, const RelativeState<T>& rel,
                               const Quat<T>& attitude) {
  if (!is_finite(attitude)) throw std::invalid_argument("privileged_lqg_step: attitude required");
  const Vec3<T> e_world = attitude * rel.y;
  const Vec3<T> edot_world = attitude * rel.v;
  return detail::lqg_control_law<T>(e_world, edot_world, attitude, ctl, nullptr);
}

// ---------------------------------------------------------------------------
// Cascade PID
// ---------------------------------------------------------------------------

template <typename T>
struct PidGains {
  T kp = T(0);
  T ki = T(0);
  T kd = T(0);
  T integrator_limit = T(0.5);
};

template <typename T>
struct PidConfig {
  PidGains<T> range{T(0.5), T(0.1), T(0.45), T(0.5)};     // y_x - d_r [m] -> pitch setpoint [rad]
  PidGains<T> lateral{T(0.5), T(0.1), T(0.45), T(0.5)};   // normalized lateral px -> roll setpoint [rad]
  PidGains<T> vertical{T(8), T(1.5), T(7), T(1)};         // normalized vertical px -> thrust delta [N]
  T yaw_rate_gain = T(1.5);                               // normalized lateral px -> yaw rate [rad/s]
  T attitude_gain = T(6);                                 // inner proportional loop, 1/s
  T tilt_limit = T(0.5);                                  // max |roll|,|pitch| setpoint, rad
  T deriv_tau = T(0.05);                                  // derivative low-pass, s
  T distance_setpoint = T(0.5);
  T target_radius = T(0.15);
  VehicleParams<T> vehicle;                               // nominal
};

template <typename T>
struct PidMemory {
  bool has_prev = false;
  Vec3<T> integral = Vec3<T>::Zero();    // range, lateral, vertical
  Vec3<T> prev_error = Vec3<T>::Zero();
  Vec3<T> deriv = Vec3<T>::Zero();       // filtered derivatives
};

// Cascade PID step. Outer loop: range error -> pitch setpoint, lateral
// image error -> roll setpoint and yaw rate, vertical image error -> thrust
// correction about hover. Inner proportional loop converts attitude
// setpoints into body rates. Misses zero the attitude setpoints and freeze
// the integrators, so the command is constant while the attitude holds.
template <typename T>
std::pair<Command<T>, PidMemory<T>> pid_step(const PidConfig<T>& cfg, const CameraModel<T>& cam,
                                             PidMemory<T> mem,
                                             const std::optional<BBox<std::type_identity_t<T>>>& box,
                                             const Quat<T>& attitude, T dt) {
  if (!is_finite(attitude)) throw std::invalid_argument("pid_step: attitude required");
  if (!(dt > T(0))) throw std::invalid_argument("pid_step: dt must be positive");
  const VehicleParams<T>& veh = cfg.vehicle;
  const T hover = veh.mass * veh.gravity.norm();

  T pitch_sp = T(0), roll_sp = T(0), yaw_rate = T(0), thrust = hover;
  if (box) {
    const Vec3<T> y_est = estimate_relative(*box, cam, cfg.target_radius);
    const T focal = cam.focal();
    Vec3<T> err;
    err[0] = y_est.x() - cfg.distance_setpoint;             // too far -> positive
    err[1] = -(box->cx - T(cam.width) / T(2)) / focal;      // target left of center -> positive
    err[2] = -(box->cy - T(cam.height) / T(2)) / focal;     // target above center -> positive

    const T alpha = cfg.deriv_tau / (cfg.deriv_tau + dt);
    const Vec3<T> raw = mem.has_prev ? Vec3<T>((err - mem.prev_error) / dt) : Vec3<T>::Zero();
    mem.deriv = alpha * mem.deriv + (T(1) - alpha) * raw;
    const PidGains<T>* gains[3] = {&cfg.range, &cfg.lateral, &cfg.vertical};
    Vec3<T> out;
    for (int i = 0; i < 3; ++i) {
      mem.integral[i] = std::clamp(mem.integral[i] + err[i] * dt, -gains[i]->integrator_limit,
                                   gains[i]->integrator_limit);
      out[i] = gains[i]->kp * err[i] + gains[i]->ki * mem.integral[i] + gains[i]->kd * mem.deriv[i];
    }
    mem.prev_error = err;
    mem.has_prev = true;

    pitch_sp = std::clamp(out[0], -cfg.tilt_limit, cfg.tilt_limit);   // +pitch tilts thrust toward +x
    roll_sp = std::clamp(-out[1], -cfg.tilt_limit, cfg.tilt_limit);   // +roll tilts thrust toward -y
    thrust = hover + out[2];
    yaw_rate = cfg.yaw_rate_gain * err[1];
  }

  const Vec3<T> rpy = euler_zyx(attitude);
  Command<T> cmd;
  cmd.thrust = thrust;
  cmd.rates[0] = cfg.attitude_gain * (roll_sp - rpy[0]);
  cmd.rates[1] = cfg.attitude_gain * (pitch_sp - rpy[1]);
  cmd.rates[2] = yaw_rate;
  return {saturate(cmd, veh), std::move(mem)};
}

}  // namespace mavtrack

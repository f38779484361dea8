#pragma once

#include <cmath>
#include <type_traits>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace mavtrack {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Quat = Eigen::Quaternion<T>;
template <typename T> using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Non-deduced parameter positions: callers may pass Eigen expressions when
// the scalar type is pinned by another argument.
template <typename T> using VecArg3 = Vec3<std::type_identity_t<T>>;
template <typename T> using VecArg4 = Vec4<std::type_identity_t<T>>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;
using Mat3d = Mat3<double>;
using Quatd = Quat<double>;

template <typename T>
Mat3<T> skew(const Vec3<T>& v) {
  Mat3<T> m;
  m << T(0), -v.z(), v.y(),
       v.z(), T(0), -v.x(),
      -v.y(), v.x(), T(0);
  return m;
}

// Quaternion exponential of a rotation vector (axis * angle).
template <typename T>
Quat<T> quat_exp(const Vec3<T>& rotvec) {
  const T a2 = rotvec.squaredNorm();
  T half_sinc;  // sin(a/2)/a
  T w;          // cos(a/2)
  if (a2 < T(1e-8)) {
    half_sinc = T(0.5) - a2 / T(48) + a2 * a2 / T(3840);
    w = T(1) - a2 / T(8) + a2 * a2 / T(384);
  } else {
    const T a = std::sqrt(a2);
    half_sinc = std::sin(a / T(2)) / a;
    w = std::cos(a / T(2));
  }
  return Quat<T>(w, rotvec.x() * half_sinc, rotvec.y() * half_sinc, rotvec.z() * half_sinc);
}

// Rotation vector of a unit quaternion; inverse of quat_exp on |angle| < pi.
template <typename T>
Vec3<T> quat_log(const Quat<T>& q_in) {
  Quat<T> q = q_in;
  if (q.w() < T(0)) q.coeffs() = -q.coeffs();
  const T vn = q.vec().norm();
  T k;  // angle / vn
  if (vn < T(1e-6)) {
    k = T(2) / q.w() * (T(1) - vn * vn / (T(3) * q.w() * q.w()));
  } else {
    k = T(2) * std::atan2(vn, q.w()) / vn;
  }
  return q.vec() * k;
}

// Rate of the rotation-vector chart theta for body rate omega, where the
// attitude is R0 * exp([theta]x). Exact coefficient with a series fallback;
// for constant omega the solution is theta(t) = omega*t, so a Runge-Kutta
// step through this chart reproduces the exponential map exactly.
template <typename T>
Vec3<T> rotvec_rate(const Vec3<T>& theta, const Vec3<T>& omega) {
  const T t2 = theta.squaredNorm();
  T c;
  if (t2 < T(0.25)) {
    c = T(1) / T(12) + t2 / T(720) + t2 * t2 / T(30240);
  } else {
    const T t = std::sqrt(t2);
    c = (T(1) - t * std::sin(t) / (T(2) * (T(1) - std::cos(t)))) / t2;
  }
  return omega + theta.cross(omega) / T(2) + c * theta.cross(theta.cross(omega));
}

// Intrinsic (roll, pitch, yaw) for R = Rz(yaw) Ry(pitch) Rx(roll).
template <typename T>
Vec3<T> euler_zyx(const Quat<T>& q) {
  const Mat3<T> r = q.toRotationMatrix();
  const T pitch = std::asin(std::clamp(-r(2, 0), T(-1), T(1)));
  const T roll = std::atan2(r(2, 1), r(2, 2));
  const T yaw = std::atan2(r(1, 0), r(0, 0));
  return Vec3<T>(roll, pitch, yaw);
}

// Angle of the relative rotation between two unit quaternions.
template <typename T>
T rotation_distance(const Quat<T>& a, const Quat<T>& b) {
  return quat_log<T>(a.conjugate() * b).norm();
}

}  // namespace mavtrack

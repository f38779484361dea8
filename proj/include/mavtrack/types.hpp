#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mavtrack/so3.hpp"

namespace mavtrack {

/// Rigid-body tracker state: world-frame position/velocity and the
/// body-to-world rotation stored as a unit quaternion.
template <typename T>
struct VehicleState {
  Vec3<T> p = Vec3<T>::Zero();
  Vec3<T> v = Vec3<T>::Zero();
  Quat<T> q = Quat<T>::Identity();
};

/// VehicleState plus the actuator states: body angular velocity and the
/// realized collective thrust.
template <typename T>
struct AugmentedVehicleState {
  VehicleState<T> base;
  Vec3<T> omega = Vec3<T>::Zero();
  T f = T(0);
};

/// Control input: collective thrust setpoint and body-rate setpoint.
template <typename T>
struct Command {
  T thrust = T(0);
  Vec3<T> rates = Vec3<T>::Zero();
};

using VehicleStated = VehicleState<double>;
using AugmentedVehicleStated = AugmentedVehicleState<double>;
using Commandd = Command<double>;

// Thrust acts along the body z axis; this is the third column of R.
template <typename T>
Vec3<T> thrust_axis(const Quat<T>& q) {
  return q * Vec3<T>::UnitZ();
}

template <typename T>
bool is_finite(const Vec3<T>& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

template <typename T>
bool is_finite(const Quat<T>& q) {
  return std::isfinite(q.w()) && std::isfinite(q.x()) && std::isfinite(q.y()) && std::isfinite(q.z());
}

template <typename T>
bool is_finite(const VehicleState<T>& s) {
  return is_finite(s.p) && is_finite(s.v) && is_finite(s.q);
}

template <typename T>
bool is_finite(const AugmentedVehicleState<T>& s) {
  return is_finite(s.base) && is_finite(s.omega) && std::isfinite(s.f);
}

template <typename T>
bool is_finite(const Command<T>& c) {
  return std::isfinite(c.thrust) && is_finite(c.rates);
}

}  // namespace mavtrack

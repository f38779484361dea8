#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mavtrack/rng.hpp"
#include "mavtrack/so3.hpp"

namespace mavtrack {

template <typename T>
struct PosVelAcc {
  Vec3<T> p = Vec3<T>::Zero();
  Vec3<T> v = Vec3<T>::Zero();
  Vec3<T> a = Vec3<T>::Zero();
};

/// Per-axis target sinusoid p_i(t) = p0_i + A_i sin(2 pi f_i t + phi_i) - A_i sin(phi_i).
template <typename T>
struct SinusoidParams {
  Vec3<T> p0 = Vec3<T>::Zero();
  Vec3<T> amplitude = Vec3<T>::Zero();  // m
  Vec3<T> frequency = Vec3<T>::Zero();  // Hz
  Vec3<T> phase = Vec3<T>::Zero();      // rad
};

template <typename T>
PosVelAcc<T> eval(const SinusoidParams<T>& s, T t) {
  PosVelAcc<T> out;
  for (int i = 0; i < 3; ++i) {
    const T w = T(2) * std::numbers::pi_v<T> * s.frequency[i];
    const T arg = w * t + s.phase[i];
    out.p[i] = s.p0[i] + s.amplitude[i] * (std::sin(arg) - std::sin(s.phase[i]));
    out.v[i] = s.amplitude[i] * w * std::cos(arg);
    out.a[i] = -s.amplitude[i] * w * w * std::sin(arg);
  }
  return out;
}

enum class TrajectoryKind {
  setpoint,
  ramp,
  cubic,
  sinusoid,
  eight2d,
  rect2d,
  eight3d,
  spiral3d,
};

/// Kinematic target trajectory with analytic derivatives. Every kind starts
/// exactly at p0. The deterministic shapes are periodic with the given
/// period; extents are meters (spiral: extent.x = radius, extent.z = climb
/// rate in m/s). rect2d rounds a rectangle through tanh blends so the
/// acceleration stays bounded and smooth.
template <typename T>
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::setpoint;
  Vec3<T> p0 = Vec3<T>::Zero();

  SinusoidParams<T> sinusoid;                 // kind == sinusoid
  Vec3<T> velocity = Vec3<T>::Zero();         // kind == ramp, m/s
  Vec4<T> cubic = Vec4<T>::Zero();            // kind == cubic: c0..c3 in m, m/s, m/s^2, m/s^3
  Vec3<T> direction = Vec3<T>::UnitX();       // kind == cubic
  Vec3<T> extent = Vec3<T>(T(2), T(1), T(1)); // shape kinds, m
  T period = T(20);                           // shape kinds, s
  T corner_sharpness = T(4);                  // kind == rect2d
};

namespace detail {

// Shape offsets relative to their own t=0 point; eval() re-anchors at p0.
template <typename T>
PosVelAcc<T> eval_shape(const Trajectory<T>& tr, T t) {
  PosVelAcc<T> out;
  const T wu = T(2) * std::numbers::pi_v<T> / tr.period;
  const T u = wu * t;
  const T s = std::sin(u), c = std::cos(u);
  switch (tr.kind) {
    case TrajectoryKind::eight2d:
    case TrajectoryKind::eight3d: {
      // planar figure eight x = Ex sin u, y = Ey sin 2u (+ z = Ez sin u in 3d)
      out.p.x() = tr.extent.x() * s;
      out.v.x() = tr.extent.x() * wu * c;
      out.a.x() = -tr.extent.x() * wu * wu * s;
      const T s2 = std::sin(T(2) * u), c2 = std::cos(T(2) * u);
      out.p.y() = tr.extent.y() * s2;
      out.v.y() = tr.extent.y() * T(2) * wu * c2;
      out.a.y() = -tr.extent.y() * T(4) * wu * wu * s2;
      if (tr.kind == TrajectoryKind::eight3d) {
        out.p.z() = tr.extent.z() * s;
        out.v.z() = tr.extent.z() * wu * c;
        out.a.z() = -tr.extent.z() * wu * wu * s;
      }
      return out;
    }
    case TrajectoryKind::rect2d: {
      const T k = tr.corner_sharpness;
      const T ax = tr.extent.x() / std::tanh(k);
      const T ay = tr.extent.y() / std::tanh(k);
      const auto sech2 = [](T z) { const T ch = std::cosh(z); return T(1) / (ch * ch); };
      // x = ax tanh(k cos u), y = ay tanh(k sin u)
      out.p.x() = ax * std::tanh(k * c);
      out.v.x() = -ax * k * wu * s * sech2(k * c);
      out.a.x() = -ax * k * wu * wu * sech2(k * c) * (c + T(2) * k * s * s * std::tanh(k * c));
      out.p.y() = ay * std::tanh(k * s);
      out.v.y() = ay * k * wu * c * sech2(k * s);
      out.a.y() = ay * k * wu * wu * sech2(k * s) * (-s - T(2) * k * c * c * std::tanh(k * s));
      return out;
    }
    case TrajectoryKind::spiral3d: {
      const T r = tr.extent.x();
      out.p = Vec3<T>(r * (c - T(1)), r * s, tr.extent.z() * t);
      out.v = Vec3<T>(-r * wu * s, r * wu * c, tr.extent.z());
      out.a = Vec3<T>(-r * wu * wu * c, -r * wu * wu * s, T(0));
      return out;
    }
    default:
      return out;
  }
}

}  // namespace detail

template <typename T>
PosVelAcc<T> eval(const Trajectory<T>& tr, T t) {
  PosVelAcc<T> out;
  switch (tr.kind) {
    case TrajectoryKind::setpoint:
      out.p = tr.p0;
      return out;
    case TrajectoryKind::ramp:
      out.p = tr.p0 + tr.velocity * t;
      out.v = tr.velocity;
      return out;
    case TrajectoryKind::cubic: {
      const T q = tr.cubic[0] + t * (tr.cubic[1] + t * (tr.cubic[2] + t * tr.cubic[3]));
      const T dq = tr.cubic[1] + t * (T(2) * tr.cubic[2] + T(3) * t * tr.cubic[3]);
      const T ddq = T(2) * tr.cubic[2] + T(6) * t * tr.cubic[3];
      out.p = tr.p0 + tr.direction * (q - tr.cubic[0]);
      out.v = tr.direction * dq;
      out.a = tr.direction * ddq;
      return out;
    }
    case TrajectoryKind::sinusoid:
      return eval(tr.sinusoid, t);
    default: {
      const PosVelAcc<T> raw = detail::eval_shape(tr, t);
      const PosVelAcc<T> origin = detail::eval_shape(tr, T(0));
      out.p = tr.p0 + raw.p - origin.p;
      out.v = raw.v;
      out.a = raw.a;
      return out;
    }
  }
}

template <typename T>
struct SinusoidRanges {
  Vec2<T> amplitude{T(1), T(2.5)};
  Vec2<T> frequency{T(0.04), T(0.25)};
  Vec2<T> phase{T(0), T(2) * std::numbers::pi_v<T>};
};

namespace detail {

template <typename T>
void check_range(const Vec2<T>& r, const char* name) {
  if (!(r[0] <= r[1]))
    throw std::invalid_argument(std::string("sample_sinusoid: inverted or empty range for ") + name);
}

}  // namespace detail

/// Independent per-axis uniform draws of amplitude, frequency and phase.
template <typename T>
SinusoidParams<T> sample_sinusoid(const SinusoidRanges<T>& ranges, RngStream& rng,
                                  const VecArg3<T>& p0) {
  detail::check_range(ranges.amplitude, "amplitude");
  detail::check_range(ranges.frequency, "frequency");
  detail::check_range(ranges.phase, "phase");
  SinusoidParams<T> out;
  out.p0 = p0;
  for (int i = 0; i < 3; ++i) out.amplitude[i] = static_cast<T>(rng.uniform(ranges.amplitude[0], ranges.amplitude[1]));
  for (int i = 0; i < 3; ++i) out.frequency[i] = static_cast<T>(rng.uniform(ranges.frequency[0], ranges.frequency[1]));
  for (int i = 0; i < 3; ++i) out.phase[i] = static_cast<T>(rng.uniform(ranges.phase[0], ranges.phase[1]));
  return out;
}

/// Peak of ||v(t)|| by dense sampling over a common-period window.
template <typename T>
T peak_speed(const SinusoidParams<T>& s, T window = T(100), int samples = 200000) {
  T best = T(0);
  for (int i = 0; i <= samples; ++i) {
    const T t = window * T(i) / T(samples);
    T v2 = T(0);
    for (int k = 0; k < 3; ++k) {
      const T w = T(2) * std::numbers::pi_v<T> * s.frequency[k];
      const T v = s.amplitude[k] * w * std::cos(w * t + s.phase[k]);
      v2 += v * v;
    }
    best = std::max(best, v2);
  }
  return std::sqrt(best);
}

// Random phases and frequencies (quantized to 0.01 Hz so one 100 s window is
// a common period), then a single amplitude rescale pinning the sampled peak
// speed at v_peak. Non-positive v_peak degenerates to a setpoint.
template <typename T>
SinusoidParams<T> sample_with_peak_velocity(T v_peak, const SinusoidRanges<T>& ranges, RngStream& rng,
                                            const VecArg3<T>& p0) {
  SinusoidParams<T> out = sample_sinusoid(ranges, rng, p0);
  if (!(v_peak > T(0))) {
    out.amplitude.setZero();
    return out;
  }
  for (int i = 0; i < 3; ++i) {
    const T q = std::round(out.frequency[i] * T(100)) / T(100);
    out.frequency[i] = std::clamp(q, ranges.frequency[0], ranges.frequency[1]);
  }
  const T peak = peak_speed(out);
  out.amplitude *= v_peak / peak;
  return out;
}

}  // namespace mavtrack

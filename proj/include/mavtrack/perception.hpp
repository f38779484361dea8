#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mavtrack/rng.hpp"
#include "mavtrack/types.hpp"

namespace mavtrack {

/// Target state relative to the tracker, expressed in the tracker body
/// frame: y = R^T (p_r - p) and likewise for velocity and acceleration.
template <typename T>
struct RelativeState {
  Vec3<T> y = Vec3<T>::Zero();
  Vec3<T> v = Vec3<T>::Zero();
  Vec3<T> a = Vec3<T>::Zero();
};

using RelativeStated = RelativeState<double>;

/// Pinhole camera with square per-axis field of view; the optical axis is
/// the body x axis, image x grows against body y, image y against body z.
template <typename T>
struct CameraModel {
  T fov = std::numbers::pi_v<T> / T(2);
  int width = 84;
  int height = 84;

  T focal() const { return T(width) / T(2) / std::tan(fov / T(2)); }

  void validate() const {
    if (!(fov > T(0)) || !(fov < std::numbers::pi_v<T>))
      throw std::invalid_argument("CameraModel: fov must lie in (0, pi)");
    if (width < 8 || height < 8) throw std::invalid_argument("CameraModel: image must be at least 8x8");
  }
};

using CameraModeld = CameraModel<double>;

/// Detected target disc in pixel coordinates.
template <typename T>
struct BBox {
  T cx = T(0);
  T cy = T(0);
  T r = T(0);
  T confidence = T(1);
};

using BBoxd = BBox<double>;

template <typename T>
struct Spherical {
  T rho = T(0);    // range, m
  T theta = T(0);  // elevation, rad
  T phi = T(0);    // azimuth, rad
};

template <typename T>
RelativeState<T> relative_state(const VehicleState<T>& tracker, const VecArg3<T>& tracker_accel,
                                const VecArg3<T>& target_p, const VecArg3<T>& target_v,
                                const VecArg3<T>& target_a) {
  const Quat<T> world_to_body = tracker.q.conjugate();
  RelativeState<T> out;
  out.y = world_to_body * (target_p - tracker.p);
  out.v = world_to_body * (target_v - tracker.v);
  out.a = world_to_body * (target_a - tracker_accel);
  return out;
}

template <typename D>
Spherical<typename D::Scalar> spherical(const Eigen::MatrixBase<D>& y_expr) {
  using T = typename D::Scalar;
  const Vec3<T> y = y_expr;
  const T rho = y.norm();
  if (rho == T(0)) throw std::domain_error("spherical: direction undefined for the zero vector");
  Spherical<T> out;
  out.rho = rho;
  out.phi = std::atan2(y.y(), y.x());
  out.theta = std::asin(std::clamp(y.z() / rho, T(-1), T(1)));
  return out;
}

/// Visibility uses per-axis angular tests against fov/2 on the open
/// interval, matching the angular reward terms.
template <typename T>
bool visible(const VecArg3<T>& y, const CameraModel<T>& cam) {
  if (!(y.x() > T(0))) return false;
  const T half = cam.fov / T(2);
  return std::abs(std::atan2(y.y(), y.x())) < half && std::abs(std::atan2(y.z(), y.x())) < half;
}

/// Projects a spherical target of the given radius; empty when not visible.
template <typename T>
std::optional<BBox<T>> project(const VecArg3<T>& y, const CameraModel<T>& cam, T target_radius) {
  if (!(target_radius > T(0))) throw std::invalid_argument("project: target_radius must be positive");
  if (!visible(y, cam)) return std::nullopt;
  const T f = cam.focal();
  BBox<T> box;
  box.cx = T(cam.width) / T(2) - f * y.y() / y.x();
  box.cy = T(cam.height) / T(2) - f * y.z() / y.x();
  box.r = f * target_radius / y.x();
  box.confidence = T(1);
  return box;
}

/// Inverts project() for a box of known target radius.
template <typename T>
Vec3<T> estimate_relative(const BBox<T>& box, const CameraModel<T>& cam, T target_radius) {
  if (!(box.r > T(0))) throw std::invalid_argument("estimate_relative: box radius must be positive");
  const T f = cam.focal();
  Vec3<T> y;
  y.x() = f * target_radius / box.r;
  y.y() = -y.x() * (box.cx - T(cam.width) / T(2)) / f;
  y.z() = -y.x() * (box.cy - T(cam.height) / T(2)) / f;
  return y;
}

template <typename T>
struct DetectorNoise {
  T pixel_sigma = T(0);     // Gaussian center jitter, px
  T miss_probability = T(0);
  T radius_jitter = T(0);   // multiplicative radius jitter fraction

  void validate() const {
    if (!(pixel_sigma >= T(0))) throw std::invalid_argument("DetectorNoise: pixel_sigma must be >= 0");
    if (!(miss_probability >= T(0)) || !(miss_probability < T(1)))
      throw std::invalid_argument("DetectorNoise: miss_probability must lie in [0,1)");
    if (!(radius_jitter >= T(0))) throw std::invalid_argument("DetectorNoise: radius_jitter must be >= 0");
  }
};

using DetectorNoised = DetectorNoise<double>;

// Synthetic detector oracle: noisy center/radius, clamped into the image,
// occasional misses. Consumes a fixed number of draws per call so the
// stream alignment does not depend on the visibility history.
template <typename T>
std::optional<BBox<T>> detect(const std::optional<BBox<std::type_identity_t<T>>>& truth,
                              const DetectorNoise<T>& noise,
                              const CameraModel<T>& cam, RngStream& rng) {
  const T nx = static_cast<T>(rng.gaussian());
  const T ny = static_cast<T>(rng.gaussian());
  const T nr = static_cast<T>(rng.gaussian());
  const T miss_draw = static_cast<T>(rng.uniform01());
  if (!truth) return std::nullopt;
  if (miss_draw < noise.miss_probability) return std::nullopt;
  BBox<T> out = *truth;
  out.cx = std::clamp(out.cx + noise.pixel_sigma * nx, T(0), T(cam.width));
  out.cy = std::clamp(out.cy + noise.pixel_sigma * ny, T(0), T(cam.height));
  out.r = std::max(T(0.25), out.r * (T(1) + noise.radius_jitter * nr));
  return out;
}

/// Row-major 8-bit grayscale frame.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const Frame&) const = default;
};

struct SceneConfig {
  std::uint8_t background = 32;
  std::uint8_t target_intensity = 255;
  int clutter_count = 0;  // seeded static discs drawn below the target
};

namespace detail {

inline void fill_disc(Frame& frame, double cx, double cy, double r, std::uint8_t value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
  const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
  const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + r + 1)));
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      const double dx = ix + 0.5 - cx;
      const double dy = iy + 0.5 - cy;
      if (dx * dx + dy * dy <= r * r) frame.data[static_cast<std::size_t>(iy) * frame.width + ix] = value;
    }
  }
}

}  // namespace detail

// Minimal rasterized stand-in for a rendered camera frame: flat background,
// optional seeded clutter discs, target drawn last as a filled disc at its
// projected center and radius.
template <typename T>
Frame render_frame(const VecArg3<T>& y, const CameraModel<T>& cam, const SceneConfig& scene,
                   T target_radius, RngStream& rng) {
  Frame frame;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.data.assign(static_cast<std::size_t>(cam.width) * cam.height, scene.background);
  for (int i = 0; i < scene.clutter_count; ++i) {
    const double cx = rng.uniform(0.0, cam.width);
    const double cy = rng.uniform(0.0, cam.height);
    const double r = rng.uniform(2.0, cam.width / 8.0);
    // clutter stays away from the target intensity so target pixels are unambiguous
    auto value = static_cast<std::uint8_t>(64 + rng.uniform01() * 128.0);
    if (value == scene.target_intensity) value = static_cast<std::uint8_t>(value ^ 1);
    detail::fill_disc(frame, cx, cy, r, value);
  }
  if (const auto box = project(y, cam, target_radius))
    detail::fill_disc(frame, static_cast<double>(box->cx), static_cast<double>(box->cy),
                      static_cast<double>(box->r), scene.target_intensity);
  return frame;
}

/// Sliding window of the H most recent observations, newest first; the
/// first push pads the missing history by repetition.
template <typename Payload>
class ObservationWindow {
 public:
  explicit ObservationWindow(int window) : window_(window) {
    if (window < 1) throw std::invalid_argument("ObservationWindow: window must be >= 1");
  }

  void push(Payload item) {
    if (items_.empty()) {
      items_.assign(static_cast<std::size_t>(window_), item);
    } else {
      items_.insert(items_.begin(), std::move(item));
      items_.pop_back();
    }
  }

  void clear() { items_.clear(); }
  bool empty() const { return items_.empty(); }
  int window() const { return window_; }
  const std::vector<Payload>& items() const { return items_; }

 private:
  int window_;
  std::vector<Payload> items_;
};

}  // namespace mavtrack

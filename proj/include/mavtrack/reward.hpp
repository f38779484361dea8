#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mavtrack/types.hpp"

namespace mavtrack {

template <typename T>
struct RewardConfig {
  T beta = T(1) / T(3);
  T k_v = T(0.4);
  T k_u = T(0.4);
  T k_c = T(10);
  T d_r = T(0.5);   // distance setpoint, m
  T d_m = T(0.3);   // minimum allowed distance, m
  T fov = std::numbers::pi_v<T> / T(2);

  void validate() const {
    if (!(beta > T(0))) throw std::invalid_argument("RewardConfig: beta must be positive");
    if (!(k_c > T(0))) throw std::invalid_argument("RewardConfig: k_c must be positive");
    if (!(k_v >= T(0)) || !(k_u >= T(0)))
      throw std::invalid_argument("RewardConfig: penalty weights must be >= 0");
    if (!(d_m > T(0)) || !(d_m < d_r))
      throw std::invalid_argument("RewardConfig: distances must satisfy 0 < d_m < d_r");
    if (!(fov > T(0)) || !(fov < std::numbers::pi_v<T>))
      throw std::invalid_argument("RewardConfig: fov must lie in (0, pi)");
  }
};

using RewardConfigd = RewardConfig<double>;

template <typename T>
struct TrackingTerms {
  T r_x, r_y, r_z, r_e;
};

template <typename T>
struct RewardTerms {
  T r_x = T(0), r_y = T(0), r_z = T(0), r_e = T(0);
  T r_v = T(0), r_u = T(0);
  bool collided = false;
  T total = T(0);
};

using RewardTermsd = RewardTerms<double>;

// Per-axis tracking terms and their geometric-mean aggregate
//   r_x = max(0, 1 - |y_x - d_r|)
//   r_y = max(0, 1 - |(2/fov) atan2(y_y, y_x)|)   (r_z alike with y_z)
//   r_e = (r_x r_y r_z)^beta clipped to [0, 1].
// atan2 keeps the angular terms defined for y_x <= 0, where they vanish.
template <typename T>
TrackingTerms<T> tracking_terms(const VecArg3<T>& y, const RewardConfig<T>& cfg) {
  if (!is_finite(y)) throw std::invalid_argument("tracking_terms: non-finite relative position");
  const T r_x = std::max(T(0), T(1) - std::abs(y.x() - cfg.d_r));
  const T scale = T(2) / cfg.fov;
  const T r_y = std::max(T(0), T(1) - std::abs(scale * std::atan2(y.y(), y.x())));
  const T r_z = std::max(T(0), T(1) - std::abs(scale * std::atan2(y.z(), y.x())));
  const T r_e = std::clamp(std::pow(r_x * r_y * r_z, cfg.beta), T(0), T(1));
  return {r_x, r_y, r_z, r_e};
}

/// Saturating velocity and control-effort penalties; u is the action
/// normalized into [-1,1]^4.
template <typename D1, typename D2>
std::pair<typename D1::Scalar, typename D1::Scalar> penalties(const Eigen::MatrixBase<D1>& v_rel,
                                                              const Eigen::MatrixBase<D2>& u_normalized) {
  using T = typename D1::Scalar;
  const T vn = v_rel.norm();
  const T un = u_normalized.norm();
  return {vn / (T(1) + vn), un / (T(1) + un)};
}

template <typename T>
RewardTerms<T> total_reward(const VecArg3<T>& y, const VecArg3<T>& v_rel, const VecArg4<T>& u_normalized,
                            const RewardConfig<T>& cfg) {
  RewardTerms<T> out;
  const TrackingTerms<T> tt = tracking_terms(y, cfg);
  out.r_x = tt.r_x;
  out.r_y = tt.r_y;
  out.r_z = tt.r_z;
  out.r_e = tt.r_e;
  const auto [r_v, r_u] = penalties(v_rel, u_normalized);
  out.r_v = r_v;
  out.r_u = r_u;
  if (y.norm() > cfg.d_m) {
    out.total = tt.r_e - cfg.k_v * r_v - cfg.k_u * r_u;
  } else {
    out.collided = true;
    out.total = -cfg.k_c;
  }
  return out;
}

}  // namespace mavtrack

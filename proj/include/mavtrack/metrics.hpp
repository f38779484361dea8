#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mavtrack {

template <typename T>
struct ScoreConfig {
  T d_r = T(0.5);
  T fov = std::numbers::pi_v<T> / T(2);
};

using ScoreConfigd = ScoreConfig<double>;

/// Per-step spherical tracking scores, each in [0, 1].
template <typename T>
struct ScoreSample {
  T p_rho = T(0);
  T p_theta = T(0);
  T p_phi = T(0);
  T p_c = T(0);
};

using ScoreSampled = ScoreSample<double>;

// Distance, elevation and azimuth scores with their mutual gating, plus the
// arithmetic-mean total. Perfect visual tracking gives exactly 1 everywhere.
template <typename T>
ScoreSample<T> score_sample(T rho, T theta, T phi, const ScoreConfig<T>& cfg) {
  if (!(rho >= T(0))) throw std::invalid_argument("score_sample: rho must be >= 0");
  const T half = cfg.fov / T(2);
  const bool in_theta = std::abs(theta) < half;
  const bool in_phi = std::abs(phi) < half;
  const bool in_rho = std::abs(rho - cfg.d_r) < T(0.5);
  ScoreSample<T> out;
  if (in_theta && in_phi) out.p_rho = std::max(T(0), T(1) - T(2) * std::abs(rho - cfg.d_r));
  if (in_phi && in_rho) out.p_theta = std::max(T(0), T(1) - T(2) * std::abs(theta) / cfg.fov);
  if (in_theta && in_rho) out.p_phi = std::max(T(0), T(1) - T(2) * std::abs(phi) / cfg.fov);
  out.p_c = (out.p_rho + out.p_theta + out.p_phi) / T(3);
  return out;
}

/// Aggregated scores: mean over steps within each run, then mean across runs.
template <typename T>
struct ScoreTable {
  T p_rho = T(0);
  T p_theta = T(0);
  T p_phi = T(0);
  T p_c = T(0);
  int runs = 0;
  long steps = 0;
};

using ScoreTabled = ScoreTable<double>;

template <typename T>
ScoreTable<T> aggregate(const std::vector<std::vector<ScoreSample<T>>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  ScoreTable<T> out;
  out.runs = static_cast<int>(runs.size());
  for (const auto& run : runs) {
    if (run.empty()) throw std::invalid_argument("aggregate: empty run");
    T rho = T(0), theta = T(0), phi = T(0), c = T(0);
    for (const auto& s : run) {
      rho += s.p_rho;
      theta += s.p_theta;
      phi += s.p_phi;
      c += s.p_c;
    }
    const T n = static_cast<T>(run.size());
    out.p_rho += rho / n;
    out.p_theta += theta / n;
    out.p_phi += phi / n;
    out.p_c += c / n;
    out.steps += static_cast<long>(run.size());
  }
  const T m = static_cast<T>(runs.size());
  out.p_rho /= m;
  out.p_theta /= m;
  out.p_phi /= m;
  out.p_c /= m;
  return out;
}

}  // namespace mavtrack

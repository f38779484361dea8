#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mavtrack/controllers.hpp"
#include "mavtrack/dynamics.hpp"
#include "mavtrack/perception.hpp"
#include "mavtrack/reward.hpp"
#include "mavtrack/trajectories.hpp"

namespace mavtrack {

enum class DynamicsModel { simple, augmented };
enum class ObservationMode { privileged, bboxes, frames };
enum class ControllerType { hover, pid, lqg, privileged_lqg, external };

std::string to_string(DynamicsModel m);
std::string to_string(ObservationMode m);
std::string to_string(ControllerType t);

struct DynamicsConfig {
  DynamicsModel model = DynamicsModel::augmented;
  bool randomize = false;
  RandomizationConfig<double> randomization;
  VehicleParamsd params;  // nominal set
};

/// Target motion specification; `kind` selects which fields apply.
struct TrajectoryConfig {
  std::string kind = "sinusoid_random";
  // explicit sinusoid
  Vec3d amplitude = Vec3d::Zero();
  Vec3d frequency = Vec3d::Zero();
  Vec3d phase = Vec3d::Zero();
  // sampled sinusoids
  SinusoidRanges<double> ranges;
  double peak_velocity = 0.5;  // sinusoid_peak
  // deterministic test families
  Vec3d velocity = Vec3d::Zero();        // ramp
  Vec4d cubic = Vec4d::Zero();           // cubic
  Vec3d direction = Vec3d::UnitX();      // cubic
  Vec3d extent = Vec3d(2.0, 1.0, 1.0);   // shapes
  double period = 20.0;
  double corner_sharpness = 4.0;         // rect2d
};

struct TargetConfig {
  double radius = 0.15;  // rendered/projected sphere radius, m
  TrajectoryConfig trajectory;
};

struct ObservationConfig {
  ObservationMode mode = ObservationMode::privileged;
  int history = 3;
};

struct PidGainsConfig {
  PidGains<double> range{0.5, 0.1, 0.45, 0.5};
  PidGains<double> lateral{0.5, 0.1, 0.45, 0.5};
  PidGains<double> vertical{8.0, 1.5, 7.0, 1.0};
  double yaw_rate_gain = 1.5;
  double attitude_gain = 6.0;
  double tilt_limit = 0.5;
  double deriv_tau = 0.05;
};

struct LqgGainsConfig {
  LqrWeights<double> weights;
  double process_accel_var = 1.0;
  double meas_position_var = 1e-4;
  double attitude_gain = 6.0;
  bool drag_compensation = true;
};

struct ControllerConfig {
  ControllerType type = ControllerType::privileged_lqg;
  LqgGainsConfig lqg;
  PidGainsConfig pid;
};

struct SpawnConfig {
  double box_half = 2.0;  // tracker position cube half-extent, m
  bool random_yaw = true;
};

struct TerminationConfig {
  bool collision_terminates = true;
  std::optional<double> target_lost_grace;  // seconds out of view before ending; disabled if empty
};

struct EpisodeConfig {
  double dt = 0.02;
  double max_duration = 40.0;
  DynamicsConfig dynamics;
  CameraModeld camera;
  TargetConfig target;
  RewardConfigd reward;  // fov mirrors camera.fov
  ObservationConfig observation;
  DetectorNoised detector;
  SceneConfig scene;
  ControllerConfig controller;
  SpawnConfig spawn;
  TerminationConfig termination;

  int nominal_steps() const { return static_cast<int>(std::ceil(max_duration / dt - 1e-9)); }
  void validate() const;  // throws ConfigError listing every violation
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Strict parse over the defaults: unknown keys and out-of-range values are
/// collected into one ConfigError.
EpisodeConfig config_from_json(const nlohmann::json& j);
EpisodeConfig load_config(const std::string& path);
nlohmann::json to_json(const EpisodeConfig& cfg);
std::string config_hash(const EpisodeConfig& cfg);

bool operator==(const EpisodeConfig& a, const EpisodeConfig& b);

}  // namespace mavtrack

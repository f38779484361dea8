#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mavtrack/config.hpp"
#include "mavtrack/metrics.hpp"

namespace mavtrack {

/// What a policy sees at one step; the payload depends on the mode. The
/// attitude quaternion rides along as the privileged channel the
/// model-based baselines are allowed to use.
struct Observation {
  ObservationMode mode = ObservationMode::privileged;
  int step = 0;
  double t = 0.0;
  RelativeStated rel;                       // privileged mode
  std::vector<std::optional<BBoxd>> boxes;  // bboxes mode, newest first
  std::vector<Frame> frames;                // frames mode, newest first
  Quatd attitude = Quatd::Identity();
};

enum class TerminationReason { running, completed, collision, target_lost, aborted };

std::string to_string(TerminationReason r);

struct StepRecord {
  int step = 0;
  double t = 0.0;
  AugmentedVehicleStated tracker;
  Vec3d target_p = Vec3d::Zero();
  Vec3d target_v = Vec3d::Zero();
  Vec3d target_a = Vec3d::Zero();
  Commandd command;
  bool saturated = false;
  RewardTermsd reward;
  ScoreSampled score;
  std::optional<BBoxd> box;  // detector output (bboxes) or projected truth (frames)
  bool external_pose = false;
};

/// Per-episode log with newline-delimited JSON and CSV serializations; the
/// NDJSON form round-trips bit-exactly.
struct EpisodeLog {
  std::uint64_t seed = 0;
  std::string hash;  // config hash
  double dt = 0.02;
  int nominal_steps = 0;
  nlohmann::json config;
  std::vector<StepRecord> records;
  TerminationReason reason = TerminationReason::running;

  std::string to_ndjson() const;
  static EpisodeLog from_ndjson(const std::string& text);
  std::string to_csv() const;

  /// Scores padded with zeros up to the nominal step count, so early
  /// termination does not shrink the averaging denominator.
  std::vector<ScoreSampled> padded_scores() const;
};

/// One tracker/target episode. Owns the randomized plant, the target
/// trajectory, the detector stream and the log; the stepping order is
/// observe -> act -> integrate -> reward/score -> log.
class Environment {
 public:
  explicit Environment(EpisodeConfig cfg);

  const Observation& reset(std::uint64_t seed);

  struct StepResult {
    RewardTermsd reward;
    ScoreSampled score;
    bool saturated = false;
    bool done = false;
    TerminationReason reason = TerminationReason::running;
  };

  /// Advance the internal dynamics under the given command.
  StepResult step(const Commandd& cmd);

  /// Tracker pose provided from outside (hardware in the loop); internal
  /// dynamics are bypassed, the target and all bookkeeping advance as usual.
  struct ExternalPose {
    Vec3d p = Vec3d::Zero();
    Vec3d v = Vec3d::Zero();
    Quatd q = Quatd::Identity();
    Vec3d omega = Vec3d::Zero();
    std::optional<double> f;  // realized thrust; defaults to hover
  };
  StepResult step_external(const ExternalPose& pose, const std::optional<Commandd>& applied_command);

  void mark_aborted();

  const Observation& observation() const { return observation_; }
  const EpisodeLog& log() const { return log_; }
  const EpisodeConfig& config() const { return cfg_; }
  const VehicleParamsd& plant() const { return plant_; }
  const AugmentedVehicleStated& state() const { return state_; }
  bool done() const { return done_; }
  bool started() const { return started_; }
  int steps_done() const { return steps_; }

 private:
  StepResult finish_step(const Commandd& used, bool saturated, bool external);
  void build_observation();

  EpisodeConfig cfg_;
  VehicleParamsd plant_;
  AugmentedVehicleStated state_;
  Trajectory<double> target_;
  RngStream detector_rng_{0};
  std::uint64_t scene_seed_ = 0;
  ObservationWindow<std::optional<BBoxd>> box_window_{1};
  ObservationWindow<Frame> frame_window_{1};
  Observation observation_;
  EpisodeLog log_;
  int steps_ = 0;
  double lost_time_ = 0.0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace mavtrack

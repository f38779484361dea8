#include "mavtrack/harness.hpp"

#include <memory>

namespace mavtrack {

Commandd hover_command(const VehicleParamsd& nominal) {
  return saturate(Commandd{nominal.mass * nominal.gravity.norm(), Vec3d::Zero()}, nominal);
}

namespace {

LqgConfig<double> lqg_config_from(const EpisodeConfig& cfg) {
  LqgConfig<double> out;
  out.weights = cfg.controller.lqg.weights;
  out.process_accel_var = cfg.controller.lqg.process_accel_var;
  out.meas_position_var = cfg.controller.lqg.meas_position_var;
  out.attitude_gain = cfg.controller.lqg.attitude_gain;
  out.drag_compensation = cfg.controller.lqg.drag_compensation;
  out.distance_setpoint = cfg.reward.d_r;
  out.target_radius = cfg.target.radius;
  out.vehicle = cfg.dynamics.params;  // nominal; the plant may be randomized
  out.dt = cfg.dt;
  return out;
}

PidConfig<double> pid_config_from(const EpisodeConfig& cfg) {
  PidConfig<double> out;
  out.range = cfg.controller.pid.range;
  out.lateral = cfg.controller.pid.lateral;
  out.vertical = cfg.controller.pid.vertical;
  out.yaw_rate_gain = cfg.controller.pid.yaw_rate_gain;
  out.attitude_gain = cfg.controller.pid.attitude_gain;
  out.tilt_limit = cfg.controller.pid.tilt_limit;
  out.deriv_tau = cfg.controller.pid.deriv_tau;
  out.distance_setpoint = cfg.reward.d_r;
  out.target_radius = cfg.target.radius;
  out.vehicle = cfg.dynamics.params;
  return out;
}

}  // namespace

Policy make_policy(const EpisodeConfig& cfg) {
  const Commandd hover = hover_command(cfg.dynamics.params);
  switch (cfg.controller.type) {
    case ControllerType::hover:
      return [hover](const Observation&) { return hover; };
    case ControllerType::privileged_lqg: {
      const auto ctl = std::make_shared<LqgController<double>>(make_lqg(lqg_config_from(cfg), cfg.camera));
      return [ctl](const Observation& obs) { return privileged_lqg_step(*ctl, obs.rel, obs.attitude); };
    }
    case ControllerType::lqg: {
      const auto ctl = std::make_shared<LqgController<double>>(make_lqg(lqg_config_from(cfg), cfg.camera));
      auto mem = std::make_shared<LqgMemory<double>>();
      const double dt = cfg.dt;
      return [ctl, mem, hover, dt](const Observation& obs) {
        const std::optional<BBoxd> box = obs.boxes.empty() ? std::nullopt : obs.boxes.front();
        if (!mem->initialized && !box) return hover;  // nothing seen yet
        auto [cmd, next] = lqg_step(*ctl, *mem, box, obs.attitude, dt);
        *mem = std::move(next);
        return cmd;
      };
    }
    case ControllerType::pid: {
      const auto pcfg = std::make_shared<PidConfig<double>>(pid_config_from(cfg));
      const auto cam = cfg.camera;
      auto mem = std::make_shared<PidMemory<double>>();
      const double dt = cfg.dt;
      return [pcfg, cam, mem, dt](const Observation& obs) {
        const std::optional<BBoxd> box = obs.boxes.empty() ? std::nullopt : obs.boxes.front();
        auto [cmd, next] = pid_step(*pcfg, cam, *mem, box, obs.attitude, dt);
        *mem = std::move(next);
        return cmd;
      };
    }
    default:
      throw std::invalid_argument("make_policy: controller type 'external' has no in-process policy");
  }
}

EpisodeLog run_episode_with_policy(const EpisodeConfig& cfg, std::uint64_t seed, const Policy& policy) {
  Environment env(cfg);
  env.reset(seed);
  while (!env.done()) {
    Commandd cmd;
    try {
      cmd = policy(env.observation());
    } catch (const std::exception&) {
      env.mark_aborted();  // partial log is returned
      break;
    }
    env.step(cmd);
  }
  return env.log();
}

EpisodeLog run_episode(const EpisodeConfig& cfg, std::uint64_t seed) {
  return run_episode_with_policy(cfg, seed, make_policy(cfg));
}

}  // namespace mavtrack

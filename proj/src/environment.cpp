#include "mavtrack/environment.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mavtrack {

using nlohmann::json;

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::running: return "running";
    case TerminationReason::completed: return "completed";
    case TerminationReason::collision: return "collision";
    case TerminationReason::target_lost: return "target_lost";
    default: return "aborted";
  }
}

namespace {

TerminationReason reason_from_string(const std::string& s) {
  if (s == "running") return TerminationReason::running;
  if (s == "completed") return TerminationReason::completed;
  if (s == "collision") return TerminationReason::collision;
  if (s == "target_lost") return TerminationReason::target_lost;
  return TerminationReason::aborted;
}

json vec3_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3d vec3_from(const json& j) { return Vec3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

json quat_json(const Quatd& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }
Quatd quat_from(const json& j) {
  return Quatd(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>());
}

json box_json(const std::optional<BBoxd>& b) {
  if (!b) return nullptr;
  return json{{"cx", b->cx}, {"cy", b->cy}, {"r", b->r}, {"confidence", b->confidence}};
}

std::optional<BBoxd> box_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return BBoxd{j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("r").get<double>(),
               j.at("confidence").get<double>()};
}

Trajectory<double> build_trajectory(const TrajectoryConfig& tc, const Vec3d& p0, RngStream& rng) {
  Trajectory<double> tr;
  tr.p0 = p0;
  const std::string& k = tc.kind;
  if (k == "setpoint") {
    tr.kind = TrajectoryKind::setpoint;
  } else if (k == "ramp") {
    tr.kind = TrajectoryKind::ramp;
    tr.velocity = tc.velocity;
  } else if (k == "cubic") {
    tr.kind = TrajectoryKind::cubic;
    tr.cubic = tc.cubic;
    tr.direction = tc.direction.normalized();
  } else if (k == "sinusoid") {
    tr.kind = TrajectoryKind::sinusoid;
    tr.sinusoid.p0 = p0;
    tr.sinusoid.amplitude = tc.amplitude;
    tr.sinusoid.frequency = tc.frequency;
    tr.sinusoid.phase = tc.phase;
  } else if (k == "sinusoid_random") {
    tr.kind = TrajectoryKind::sinusoid;
    tr.sinusoid = sample_sinusoid(tc.ranges, rng, p0);
  } else if (k == "sinusoid_peak") {
    tr.kind = TrajectoryKind::sinusoid;
    tr.sinusoid = sample_with_peak_velocity(tc.peak_velocity, tc.ranges, rng, p0);
  } else {
    tr.extent = tc.extent;
    tr.period = tc.period;
    tr.corner_sharpness = tc.corner_sharpness;
    if (k == "eight2d") tr.kind = TrajectoryKind::eight2d;
    else if (k == "rect2d") tr.kind = TrajectoryKind::rect2d;
    else if (k == "eight3d") tr.kind = TrajectoryKind::eight3d;
    else tr.kind = TrajectoryKind::spiral3d;
  }
  return tr;
}

}  // namespace

Environment::Environment(EpisodeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.reward.fov = cfg_.camera.fov;
  cfg_.validate();
}

const Observation& Environment::reset(std::uint64_t seed) {
  RngStream params_rng = RngStream::named(seed, "params");
  RngStream spawn_rng = RngStream::named(seed, "spawn");
  RngStream traj_rng = RngStream::named(seed, "trajectory");
  detector_rng_ = RngStream::named(seed, "detector");
  scene_seed_ = splitmix64(seed ^ fnv1a64("scene"));

  plant_ = cfg_.dynamics.randomize
               ? randomize_params(cfg_.dynamics.params, cfg_.dynamics.randomization, params_rng)
               : cfg_.dynamics.params;

  // tracker spawns level at a random position and yaw inside the box
  state_ = AugmentedVehicleStated{};
  for (int i = 0; i < 3; ++i) state_.base.p[i] = spawn_rng.uniform(-cfg_.spawn.box_half, cfg_.spawn.box_half);
  const double yaw = cfg_.spawn.random_yaw ? spawn_rng.uniform(0.0, 2 * std::numbers::pi) : 0.0;
  state_.base.q = quat_exp(Vec3d(0, 0, yaw));
  state_.f = std::clamp(plant_.mass * plant_.gravity.norm(), plant_.thrust_min, plant_.thrust_max);

  // the target starts ahead on the optical axis at the distance setpoint
  const Vec3d target_p0 = state_.base.p + state_.base.q * Vec3d(cfg_.reward.d_r, 0, 0);
  target_ = build_trajectory(cfg_.target.trajectory, target_p0, traj_rng);

  box_window_ = ObservationWindow<std::optional<BBoxd>>(cfg_.observation.history);
  frame_window_ = ObservationWindow<Frame>(cfg_.observation.history);

  steps_ = 0;
  lost_time_ = 0.0;
  done_ = false;
  started_ = true;

  log_ = EpisodeLog{};
  log_.seed = seed;
  log_.hash = config_hash(cfg_);
  log_.dt = cfg_.dt;
  log_.nominal_steps = cfg_.nominal_steps();
  log_.config = to_json(cfg_);

  build_observation();
  return observation_;
}

void Environment::build_observation() {
  const double t = steps_ * cfg_.dt;
  const auto tgt = eval(target_, t);
  const Vec3d accel = cfg_.dynamics.model == DynamicsModel::augmented
                          ? body_acceleration(state_, plant_)
                          : body_acceleration(state_.base, state_.f, plant_);
  observation_ = Observation{};
  observation_.mode = cfg_.observation.mode;
  observation_.step = steps_;
  observation_.t = t;
  observation_.attitude = state_.base.q;
  observation_.rel = relative_state(state_.base, accel, tgt.p, tgt.v, tgt.a);
  switch (cfg_.observation.mode) {
    case ObservationMode::privileged:
      break;
    case ObservationMode::bboxes: {
      const auto truth = project(observation_.rel.y, cfg_.camera, cfg_.target.radius);
      box_window_.push(detect(truth, cfg_.detector, cfg_.camera, detector_rng_));
      observation_.boxes = box_window_.items();
      break;
    }
    case ObservationMode::frames: {
      RngStream frame_rng(scene_seed_);  // static clutter: same layout every frame
      frame_window_.push(render_frame(observation_.rel.y, cfg_.camera, cfg_.scene, cfg_.target.radius,
                                      frame_rng));
      observation_.frames = frame_window_.items();
      break;
    }
  }
}

Environment::StepResult Environment::step(const Commandd& cmd) {
  if (!started_ || done_) throw std::logic_error("Environment::step: episode not running");
  const Commandd sat = saturate(cmd, plant_);
  const bool clipped = sat.thrust != cmd.thrust || (sat.rates - cmd.rates).norm() != 0.0;
  if (cfg_.dynamics.model == DynamicsModel::augmented) {
    state_ = step_augmented(state_, sat, plant_, cfg_.dt);
  } else {
    state_.base = step_simple(state_.base, sat, plant_, cfg_.dt);
    state_.omega = sat.rates;
    state_.f = sat.thrust;
  }
  return finish_step(sat, clipped, false);
}

Environment::StepResult Environment::step_external(const ExternalPose& pose,
                                                   const std::optional<Commandd>& applied_command) {
  if (!started_ || done_) throw std::logic_error("Environment::step_external: episode not running");
  if (!is_finite(pose.p) || !is_finite(pose.v) || !is_finite(pose.q) || !is_finite(pose.omega) ||
      (pose.f && !std::isfinite(*pose.f)))
    throw std::invalid_argument("step_external: non-finite pose");
  state_.base.p = pose.p;
  state_.base.v = pose.v;
  // renormalize only when needed; replaying an already-unit quaternion must
  // not perturb its bits
  state_.base.q = pose.q;
  if (std::abs(state_.base.q.squaredNorm() - 1.0) > 1e-12) state_.base.q.normalize();
  state_.omega = pose.omega;
  state_.f = pose.f ? *pose.f : std::clamp(plant_.mass * plant_.gravity.norm(), plant_.thrust_min, plant_.thrust_max);
  const Commandd used = applied_command ? saturate(*applied_command, plant_)
                                        : Commandd{state_.f, Vec3d::Zero()};
  return finish_step(used, false, true);
}

Environment::StepResult Environment::finish_step(const Commandd& used, bool saturated, bool external) {
  ++steps_;
  const double t = steps_ * cfg_.dt;
  const auto tgt = eval(target_, t);
  const Vec3d accel = cfg_.dynamics.model == DynamicsModel::augmented
                          ? body_acceleration(state_, plant_)
                          : body_acceleration(state_.base, state_.f, plant_);
  const RelativeStated rel = relative_state(state_.base, accel, tgt.p, tgt.v, tgt.a);

  StepRecord rec;
  rec.step = steps_ - 1;
  rec.t = t;
  rec.tracker = state_;
  rec.target_p = tgt.p;
  rec.target_v = tgt.v;
  rec.target_a = tgt.a;
  rec.command = used;
  rec.saturated = saturated;
  rec.external_pose = external;
  rec.reward = total_reward(rel.y, rel.v, normalize_command(used, plant_), cfg_.reward);
  if (rel.y.norm() > 0) {
    const auto sph = spherical(rel.y);
    rec.score = score_sample(sph.rho, sph.theta, sph.phi, ScoreConfigd{cfg_.reward.d_r, cfg_.camera.fov});
  }
  if (cfg_.observation.mode != ObservationMode::privileged)
    rec.box = project(rel.y, cfg_.camera, cfg_.target.radius);

  StepResult out;
  out.reward = rec.reward;
  out.score = rec.score;
  out.saturated = saturated;

  if (rec.reward.collided && cfg_.termination.collision_terminates) {
    done_ = true;
    log_.reason = TerminationReason::collision;
  }
  if (cfg_.termination.target_lost_grace) {
    lost_time_ = visible(rel.y, cfg_.camera) ? 0.0 : lost_time_ + cfg_.dt;
    if (!done_ && lost_time_ > *cfg_.termination.target_lost_grace) {
      done_ = true;
      log_.reason = TerminationReason::target_lost;
    }
  }
  if (!done_ && steps_ >= cfg_.nominal_steps()) {
    done_ = true;
    log_.reason = TerminationReason::completed;
  }

  log_.records.push_back(std::move(rec));
  out.done = done_;
  out.reason = log_.reason;
  if (!done_) build_observation();
  return out;
}

void Environment::mark_aborted() {
  done_ = true;
  log_.reason = TerminationReason::aborted;
}

std::vector<ScoreSampled> EpisodeLog::padded_scores() const {
  std::vector<ScoreSampled> out;
  out.reserve(static_cast<std::size_t>(nominal_steps));
  for (const auto& r : records) out.push_back(r.score);
  while (static_cast<int>(out.size()) < nominal_steps) out.push_back(ScoreSampled{});
  return out;
}

std::string EpisodeLog::to_ndjson() const {
  std::ostringstream os;
  json header{{"type", "header"}, {"seed", seed},          {"config_hash", hash},
              {"dt", dt},         {"nominal_steps", nominal_steps}, {"config", config}};
  os << header.dump() << "\n";
  for (const auto& r : records) {
    json j{{"type", "step"},
           {"step", r.step},
           {"t", r.t},
           {"tracker",
            {{"p", vec3_json(r.tracker.base.p)},
             {"v", vec3_json(r.tracker.base.v)},
             {"q", quat_json(r.tracker.base.q)},
             {"omega", vec3_json(r.tracker.omega)},
             {"f", r.tracker.f}}},
           {"target", {{"p", vec3_json(r.target_p)}, {"v", vec3_json(r.target_v)}, {"a", vec3_json(r.target_a)}}},
           {"command", {{"thrust", r.command.thrust}, {"rates", vec3_json(r.command.rates)}}},
           {"saturated", r.saturated},
           {"external_pose", r.external_pose},
           {"reward",
            {{"r_x", r.reward.r_x},
             {"r_y", r.reward.r_y},
             {"r_z", r.reward.r_z},
             {"r_e", r.reward.r_e},
             {"r_v", r.reward.r_v},
             {"r_u", r.reward.r_u},
             {"collided", r.reward.collided},
             {"total", r.reward.total}}},
           {"score",
            {{"p_rho", r.score.p_rho},
             {"p_theta", r.score.p_theta},
             {"p_phi", r.score.p_phi},
             {"p_c", r.score.p_c}}},
           {"box", box_json(r.box)}};
    os << j.dump() << "\n";
  }
  json footer{{"type", "end"}, {"reason", to_string(reason)}, {"steps", records.size()}};
  os << footer.dump() << "\n";
  return os.str();
}

EpisodeLog EpisodeLog::from_ndjson(const std::string& text) {
  EpisodeLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      log.seed = j.at("seed").get<std::uint64_t>();
      log.hash = j.at("config_hash").get<std::string>();
      log.dt = j.at("dt").get<double>();
      log.nominal_steps = j.at("nominal_steps").get<int>();
      log.config = j.at("config");
    } else if (type == "step") {
      StepRecord r;
      r.step = j.at("step").get<int>();
      r.t = j.at("t").get<double>();
      const auto& tr = j.at("tracker");
      r.tracker.base.p = vec3_from(tr.at("p"));
      r.tracker.base.v = vec3_from(tr.at("v"));
      r.tracker.base.q = quat_from(tr.at("q"));
      r.tracker.omega = vec3_from(tr.at("omega"));
      r.tracker.f = tr.at("f").get<double>();
      const auto& tg = j.at("target");
      r.target_p = vec3_from(tg.at("p"));
      r.target_v = vec3_from(tg.at("v"));
      r.target_a = vec3_from(tg.at("a"));
      r.command.thrust = j.at("command").at("thrust").get<double>();
      r.command.rates = vec3_from(j.at("command").at("rates"));
      r.saturated = j.at("saturated").get<bool>();
      r.external_pose = j.at("external_pose").get<bool>();
      const auto& rw = j.at("reward");
      r.reward.r_x = rw.at("r_x").get<double>();
      r.reward.r_y = rw.at("r_y").get<double>();
      r.reward.r_z = rw.at("r_z").get<double>();
      r.reward.r_e = rw.at("r_e").get<double>();
      r.reward.r_v = rw.at("r_v").get<double>();
      r.reward.r_u = rw.at("r_u").get<double>();
      r.reward.collided = rw.at("collided").get<bool>();
      r.reward.total = rw.at("total").get<double>();
      const auto& sc = j.at("score");
      r.score.p_rho = sc.at("p_rho").get<double>();
      r.score.p_theta = sc.at("p_theta").get<double>();
      r.score.p_phi = sc.at("p_phi").get<double>();
      r.score.p_c = sc.at("p_c").get<double>();
      r.box = box_from(j.at("box"));
      log.records.push_back(std::move(r));
    } else if (type == "end") {
      log.reason = reason_from_string(j.at("reason").get<std::string>());
    }
  }
  return log;
}

std::string EpisodeLog::to_csv() const {
  std::ostringstream os;
  os << "step,t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,f,"
        "tpx,tpy,tpz,tvx,tvy,tvz,tax,tay,taz,cmd_thrust,cmd_wx,cmd_wy,cmd_wz,saturated,"
        "r_x,r_y,r_z,r_e,r_v,r_u,collided,reward_total,p_rho,p_theta,p_phi,p_c\n";
  char buf[64];
  const auto num = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? "\n" : ",");
  };
  for (const auto& r : records) {
    os << r.step << ",";
    num(r.t);
    for (int i = 0; i < 3; ++i) num(r.tracker.base.p[i]);
    for (int i = 0; i < 3; ++i) num(r.tracker.base.v[i]);
    num(r.tracker.base.q.w());
    num(r.tracker.base.q.x());
    num(r.tracker.base.q.y());
    num(r.tracker.base.q.z());
    for (int i = 0; i < 3; ++i) num(r.tracker.omega[i]);
    num(r.tracker.f);
    for (int i = 0; i < 3; ++i) num(r.target_p[i]);
    for (int i = 0; i < 3; ++i) num(r.target_v[i]);
    for (int i = 0; i < 3; ++i) num(r.target_a[i]);
    num(r.command.thrust);
    for (int i = 0; i < 3; ++i) num(r.command.rates[i]);
    os << (r.saturated ? 1 : 0) << ",";
    num(r.reward.r_x);
    num(r.reward.r_y);
    num(r.reward.r_z);
    num(r.reward.r_e);
    num(r.reward.r_v);
    num(r.reward.r_u);
    os << (r.reward.collided ? 1 : 0) << ",";
    num(r.reward.total);
    num(r.score.p_rho);
    num(r.score.p_theta);
    num(r.score.p_phi);
    num(r.score.p_c, true);
  }
  return os.str();
}

}  // namespace mavtrack

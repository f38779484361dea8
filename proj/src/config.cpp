#include "mavtrack/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mavtrack {

using nlohmann::json;

std::string to_string(DynamicsModel m) { return m == DynamicsModel::simple ? "simple" : "augmented"; }

std::string to_string(ObservationMode m) {
  switch (m) {
    case ObservationMode::privileged: return "privileged";
    case ObservationMode::bboxes: return "bboxes";
    default: return "frames";
  }
}

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::hover: return "hover";
    case ControllerType::pid: return "pid";
    case ControllerType::lqg: return "lqg";
    case ControllerType::privileged_lqg: return "privileged_lqg";
    default: return "external";
  }
}

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid config (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << "):";
        for (const auto& s : issues) os << "\n  - " << s;
        return os.str();
      }()),
      issues_(std::move(issues)) {}

namespace {

struct Reader {
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& what) { issues.push_back(path + ": " + what); }

  // rejects unknown keys at this level
  void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return;
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
      if (!ok.count(key)) fail(path + "." + key, "unknown key");
  }

  bool has(const json& j, const char* key) const { return j.is_object() && j.contains(key); }

  void num(const json& j, const std::string& path, const char* key, double& out) {
    if (!has(j, key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
      return;
    }
    out = v.get<double>();
  }

  void integer(const json& j, const std::string& path, const char* key, int& out) {
    if (!has(j, key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
      fail(path + "." + key, "expected an integer");
      return;
    }
    out = v.get<int>();
  }

  void boolean(const json& j, const std::string& path, const char* key, bool& out) {
    if (!has(j, key)) return;
    const auto& v = j.at(key);
    if (!v.is_boolean()) {
      fail(path + "." + key, "expected a boolean");
      return;
    }
    out = v.get<bool>();
  }

  void str(const json& j, const std::string& path, const char* key, std::string& out) {
    if (!has(j, key)) return;
    const auto& v = j.at(key);
    if (!v.is_string()) {
      fail(path + "." + key, "expected a string");
      return;
    }
    out = v.get<std::string>();
  }

  template <int N>
  void vec(const json& j, const std::string& path, const char* key, Eigen::Matrix<double, N, 1>& out) {
    if (!has(j, key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != N) {
      fail(path + "." + key, "expected an array of " + std::to_string(N) + " numbers");
      return;
    }
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) {
        fail(path + "." + key, "expected an array of " + std::to_string(N) + " numbers");
        return;
      }
      out[i] = v[i].get<double>();
    }
  }

  void positive(const std::string& path, const char* key, double v) {
    if (!(v > 0)) fail(path + std::string(".") + key, "must be positive");
  }
};

void read_gains(Reader& r, const json& j, const std::string& path, PidGains<double>& g) {
  r.check_keys(j, path, {"kp", "ki", "kd", "integrator_limit"});
  if (!j.is_object()) return;
  r.num(j, path, "kp", g.kp);
  r.num(j, path, "ki", g.ki);
  r.num(j, path, "kd", g.kd);
  r.num(j, path, "integrator_limit", g.integrator_limit);
}

}  // namespace

EpisodeConfig config_from_json(const json& root) {
  EpisodeConfig cfg;
  Reader r;

  r.check_keys(root, "config",
               {"dt", "max_duration", "dynamics", "camera", "target", "reward", "observation",
                "detector", "scene", "controller", "spawn", "termination"});
  if (!root.is_object()) throw ConfigError(std::move(r.issues));

  r.num(root, "config", "dt", cfg.dt);
  r.num(root, "config", "max_duration", cfg.max_duration);

  if (r.has(root, "dynamics")) {
    const auto& j = root.at("dynamics");
    const std::string path = "dynamics";
    r.check_keys(j, path, {"model", "randomize", "randomize_fraction", "max_settling_time", "params"});
    std::string model = to_string(cfg.dynamics.model);
    r.str(j, path, "model", model);
    if (model == "simple") cfg.dynamics.model = DynamicsModel::simple;
    else if (model == "augmented") cfg.dynamics.model = DynamicsModel::augmented;
    else r.fail(path + ".model", "must be 'simple' or 'augmented'");
    r.boolean(j, path, "randomize", cfg.dynamics.randomize);
    r.num(j, path, "randomize_fraction", cfg.dynamics.randomization.fraction);
    r.num(j, path, "max_settling_time", cfg.dynamics.randomization.max_settling_time);
    if (r.has(j, "params")) {
      const auto& p = j.at("params");
      const std::string pp = path + ".params";
      r.check_keys(p, pp,
                   {"mass", "inertia_diag", "gravity", "drag_diag", "thrust_gain", "rate_gain",
                    "thrust_limits", "rate_limit"});
      auto& veh = cfg.dynamics.params;
      r.num(p, pp, "mass", veh.mass);
      Vec3d inertia(veh.inertia(0, 0), veh.inertia(1, 1), veh.inertia(2, 2));
      r.vec<3>(p, pp, "inertia_diag", inertia);
      veh.inertia = inertia.asDiagonal();
      double gravity = veh.gravity.norm();
      r.num(p, pp, "gravity", gravity);
      veh.gravity = Vec3d(0, 0, gravity);
      Vec3d drag(veh.drag(0, 0), veh.drag(1, 1), veh.drag(2, 2));
      r.vec<3>(p, pp, "drag_diag", drag);
      veh.drag = drag.asDiagonal();
      r.num(p, pp, "thrust_gain", veh.thrust_gain);
      r.num(p, pp, "rate_gain", veh.rate_gain);
      Vec2d limits(veh.thrust_min, veh.thrust_max);
      r.vec<2>(p, pp, "thrust_limits", limits);
      veh.thrust_min = limits[0];
      veh.thrust_max = limits[1];
      r.num(p, pp, "rate_limit", veh.rate_limit);
    }
  }

  if (r.has(root, "camera")) {
    const auto& j = root.at("camera");
    r.check_keys(j, "camera", {"fov", "width", "height"});
    r.num(j, "camera", "fov", cfg.camera.fov);
    r.integer(j, "camera", "width", cfg.camera.width);
    r.integer(j, "camera", "height", cfg.camera.height);
  }

  if (r.has(root, "target")) {
    const auto& j = root.at("target");
    r.check_keys(j, "target", {"radius", "trajectory"});
    r.num(j, "target", "radius", cfg.target.radius);
    if (r.has(j, "trajectory")) {
      const auto& t = j.at("trajectory");
      const std::string tp = "target.trajectory";
      r.check_keys(t, tp,
                   {"kind", "amplitude", "frequency", "phase", "amplitude_range", "frequency_range",
                    "phase_range", "peak_velocity", "velocity", "cubic", "direction", "extent",
                    "period", "corner_sharpness"});
      auto& tr = cfg.target.trajectory;
      r.str(t, tp, "kind", tr.kind);
      r.vec<3>(t, tp, "amplitude", tr.amplitude);
      r.vec<3>(t, tp, "frequency", tr.frequency);
      r.vec<3>(t, tp, "phase", tr.phase);
      r.vec<2>(t, tp, "amplitude_range", tr.ranges.amplitude);
      r.vec<2>(t, tp, "frequency_range", tr.ranges.frequency);
      r.vec<2>(t, tp, "phase_range", tr.ranges.phase);
      r.num(t, tp, "peak_velocity", tr.peak_velocity);
      r.vec<3>(t, tp, "velocity", tr.velocity);
      r.vec<4>(t, tp, "cubic", tr.cubic);
      r.vec<3>(t, tp, "direction", tr.direction);
      r.vec<3>(t, tp, "extent", tr.extent);
      r.num(t, tp, "period", tr.period);
      r.num(t, tp, "corner_sharpness", tr.corner_sharpness);
    }
  }

  if (r.has(root, "reward")) {
    const auto& j = root.at("reward");
    r.check_keys(j, "reward", {"beta", "k_v", "k_u", "k_c", "d_r", "d_m"});
    r.num(j, "reward", "beta", cfg.reward.beta);
    r.num(j, "reward", "k_v", cfg.reward.k_v);
    r.num(j, "reward", "k_u", cfg.reward.k_u);
    r.num(j, "reward", "k_c", cfg.reward.k_c);
    r.num(j, "reward", "d_r", cfg.reward.d_r);
    r.num(j, "reward", "d_m", cfg.reward.d_m);
  }

  if (r.has(root, "observation")) {
    const auto& j = root.at("observation");
    r.check_keys(j, "observation", {"mode", "history"});
    std::string mode = to_string(cfg.observation.mode);
    r.str(j, "observation", "mode", mode);
    if (mode == "privileged") cfg.observation.mode = ObservationMode::privileged;
    else if (mode == "bboxes") cfg.observation.mode = ObservationMode::bboxes;
    else if (mode == "frames") cfg.observation.mode = ObservationMode::frames;
    else r.fail("observation.mode", "must be 'privileged', 'bboxes' or 'frames'");
    r.integer(j, "observation", "history", cfg.observation.history);
  }

  if (r.has(root, "detector")) {
    const auto& j = root.at("detector");
    r.check_keys(j, "detector", {"pixel_noise", "miss_probability", "radius_jitter"});
    r.num(j, "detector", "pixel_noise", cfg.detector.pixel_sigma);
    r.num(j, "detector", "miss_probability", cfg.detector.miss_probability);
    r.num(j, "detector", "radius_jitter", cfg.detector.radius_jitter);
  }

  if (r.has(root, "scene")) {
    const auto& j = root.at("scene");
    r.check_keys(j, "scene", {"background", "target_intensity", "clutter_count"});
    int bg = cfg.scene.background, ti = cfg.scene.target_intensity;
    r.integer(j, "scene", "background", bg);
    r.integer(j, "scene", "target_intensity", ti);
    r.integer(j, "scene", "clutter_count", cfg.scene.clutter_count);
    if (bg < 0 || bg > 255) r.fail("scene.background", "must lie in [0, 255]");
    if (ti < 0 || ti > 255) r.fail("scene.target_intensity", "must lie in [0, 255]");
    cfg.scene.background = static_cast<std::uint8_t>(bg);
    cfg.scene.target_intensity = static_cast<std::uint8_t>(ti);
  }

  if (r.has(root, "controller")) {
    const auto& j = root.at("controller");
    r.check_keys(j, "controller", {"type", "lqg", "pid"});
    std::string type = to_string(cfg.controller.type);
    r.str(j, "controller", "type", type);
    if (type == "hover") cfg.controller.type = ControllerType::hover;
    else if (type == "pid") cfg.controller.type = ControllerType::pid;
    else if (type == "lqg") cfg.controller.type = ControllerType::lqg;
    else if (type == "privileged_lqg") cfg.controller.type = ControllerType::privileged_lqg;
    else if (type == "external") cfg.controller.type = ControllerType::external;
    else r.fail("controller.type", "must be one of hover|pid|lqg|privileged_lqg|external");

    if (r.has(j, "lqg")) {
      const auto& l = j.at("lqg");
      const std::string lp = "controller.lqg";
      r.check_keys(l, lp,
                   {"position_weight", "velocity_weight", "effort_weight", "process_accel_var",
                    "meas_position_var", "attitude_gain", "drag_compensation"});
      r.num(l, lp, "position_weight", cfg.controller.lqg.weights.position);
      r.num(l, lp, "velocity_weight", cfg.controller.lqg.weights.velocity);
      r.num(l, lp, "effort_weight", cfg.controller.lqg.weights.effort);
      r.num(l, lp, "process_accel_var", cfg.controller.lqg.process_accel_var);
      r.num(l, lp, "meas_position_var", cfg.controller.lqg.meas_position_var);
      r.num(l, lp, "attitude_gain", cfg.controller.lqg.attitude_gain);
      r.boolean(l, lp, "drag_compensation", cfg.controller.lqg.drag_compensation);
    }
    if (r.has(j, "pid")) {
      const auto& p = j.at("pid");
      const std::string pp = "controller.pid";
      r.check_keys(p, pp,
                   {"range", "lateral", "vertical", "yaw_rate_gain", "attitude_gain", "tilt_limit",
                    "deriv_tau"});
      if (r.has(p, "range")) read_gains(r, p.at("range"), pp + ".range", cfg.controller.pid.range);
      if (r.has(p, "lateral")) read_gains(r, p.at("lateral"), pp + ".lateral", cfg.controller.pid.lateral);
      if (r.has(p, "vertical")) read_gains(r, p.at("vertical"), pp + ".vertical", cfg.controller.pid.vertical);
      r.num(p, pp, "yaw_rate_gain", cfg.controller.pid.yaw_rate_gain);
      r.num(p, pp, "attitude_gain", cfg.controller.pid.attitude_gain);
      r.num(p, pp, "tilt_limit", cfg.controller.pid.tilt_limit);
      r.num(p, pp, "deriv_tau", cfg.controller.pid.deriv_tau);
    }
  }

  if (r.has(root, "spawn")) {
    const auto& j = root.at("spawn");
    r.check_keys(j, "spawn", {"box_half", "random_yaw"});
    r.num(j, "spawn", "box_half", cfg.spawn.box_half);
    r.boolean(j, "spawn", "random_yaw", cfg.spawn.random_yaw);
  }

  if (r.has(root, "termination")) {
    const auto& j = root.at("termination");
    r.check_keys(j, "termination", {"collision_terminates", "target_lost_grace"});
    r.boolean(j, "termination", "collision_terminates", cfg.termination.collision_terminates);
    if (r.has(j, "target_lost_grace")) {
      const auto& v = j.at("target_lost_grace");
      if (v.is_null()) cfg.termination.target_lost_grace.reset();
      else if (v.is_number()) cfg.termination.target_lost_grace = v.get<double>();
      else r.fail("termination.target_lost_grace", "expected a number or null");
    }
  }

  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  cfg.reward.fov = cfg.camera.fov;  // single source for the field of view
  cfg.validate();
  return cfg;
}

void EpisodeConfig::validate() const {
  std::vector<std::string> issues;
  const auto check = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };

  check(dt > 0, "dt: must be positive");
  check(max_duration > 0, "max_duration: must be positive");
  check(dynamics.randomization.fraction >= 0 && dynamics.randomization.fraction < 1,
        "dynamics.randomize_fraction: must lie in [0, 1)");
  check(dynamics.randomization.max_settling_time > 0, "dynamics.max_settling_time: must be positive");
  try {
    dynamics.params.validate();
  } catch (const std::invalid_argument& e) {
    issues.push_back(std::string("dynamics.params: ") + e.what());
  }
  try {
    camera.validate();
  } catch (const std::invalid_argument& e) {
    issues.push_back(std::string("camera: ") + e.what());
  }
  check(target.radius > 0, "target.radius: must be positive");
  {
    const auto& k = target.trajectory.kind;
    const bool known = k == "setpoint" || k == "ramp" || k == "cubic" || k == "sinusoid" ||
                       k == "sinusoid_random" || k == "sinusoid_peak" || k == "eight2d" ||
                       k == "rect2d" || k == "eight3d" || k == "spiral3d";
    check(known, "target.trajectory.kind: unknown kind '" + k + "'");
    if (k == "sinusoid_random" || k == "sinusoid_peak") {
      check(target.trajectory.ranges.amplitude[0] <= target.trajectory.ranges.amplitude[1],
            "target.trajectory.amplitude_range: inverted");
      check(target.trajectory.ranges.frequency[0] <= target.trajectory.ranges.frequency[1],
            "target.trajectory.frequency_range: inverted");
      check(target.trajectory.ranges.phase[0] <= target.trajectory.ranges.phase[1],
            "target.trajectory.phase_range: inverted");
      check(target.trajectory.ranges.frequency[0] > 0, "target.trajectory.frequency_range: must be positive");
    }
    if (k == "sinusoid_peak") check(target.trajectory.peak_velocity >= 0, "target.trajectory.peak_velocity: must be >= 0");
    if (k == "eight2d" || k == "rect2d" || k == "eight3d" || k == "spiral3d")
      check(target.trajectory.period > 0, "target.trajectory.period: must be positive");
    if (k == "rect2d") check(target.trajectory.corner_sharpness > 0, "target.trajectory.corner_sharpness: must be positive");
  }
  try {
    RewardConfigd rcopy = reward;
    rcopy.fov = camera.fov;
    rcopy.validate();
  } catch (const std::invalid_argument& e) {
    issues.push_back(std::string("reward: ") + e.what());
  }
  check(observation.history >= 1, "observation.history: must be >= 1");
  try {
    detector.validate();
  } catch (const std::invalid_argument& e) {
    issues.push_back(std::string("detector: ") + e.what());
  }
  check(spawn.box_half >= 0, "spawn.box_half: must be >= 0");
  if (termination.target_lost_grace)
    check(*termination.target_lost_grace >= 0, "termination.target_lost_grace: must be >= 0");

  // the model-based baselines consume specific observation payloads
  if (controller.type == ControllerType::pid || controller.type == ControllerType::lqg)
    check(observation.mode == ObservationMode::bboxes,
          "controller.type: " + to_string(controller.type) + " requires observation.mode 'bboxes'");
  if (controller.type == ControllerType::privileged_lqg)
    check(observation.mode == ObservationMode::privileged,
          "controller.type: privileged_lqg requires observation.mode 'privileged'");

  if (!issues.empty()) throw ConfigError(std::move(issues));
}

json to_json(const EpisodeConfig& cfg) {
  const auto vec3 = [](const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); };
  json j;
  j["dt"] = cfg.dt;
  j["max_duration"] = cfg.max_duration;
  j["dynamics"] = {
      {"model", to_string(cfg.dynamics.model)},
      {"randomize", cfg.dynamics.randomize},
      {"randomize_fraction", cfg.dynamics.randomization.fraction},
      {"max_settling_time", cfg.dynamics.randomization.max_settling_time},
      {"params",
       {{"mass", cfg.dynamics.params.mass},
        {"inertia_diag", json::array({cfg.dynamics.params.inertia(0, 0), cfg.dynamics.params.inertia(1, 1),
                                      cfg.dynamics.params.inertia(2, 2)})},
        {"gravity", cfg.dynamics.params.gravity.norm()},
        {"drag_diag", json::array({cfg.dynamics.params.drag(0, 0), cfg.dynamics.params.drag(1, 1),
                                   cfg.dynamics.params.drag(2, 2)})},
        {"thrust_gain", cfg.dynamics.params.thrust_gain},
        {"rate_gain", cfg.dynamics.params.rate_gain},
        {"thrust_limits", json::array({cfg.dynamics.params.thrust_min, cfg.dynamics.params.thrust_max})},
        {"rate_limit", cfg.dynamics.params.rate_limit}}}};
  j["camera"] = {{"fov", cfg.camera.fov}, {"width", cfg.camera.width}, {"height", cfg.camera.height}};
  j["target"] = {{"radius", cfg.target.radius},
                 {"trajectory",
                  {{"kind", cfg.target.trajectory.kind},
                   {"amplitude", vec3(cfg.target.trajectory.amplitude)},
                   {"frequency", vec3(cfg.target.trajectory.frequency)},
                   {"phase", vec3(cfg.target.trajectory.phase)},
                   {"amplitude_range", json::array({cfg.target.trajectory.ranges.amplitude[0],
                                                    cfg.target.trajectory.ranges.amplitude[1]})},
                   {"frequency_range", json::array({cfg.target.trajectory.ranges.frequency[0],
                                                    cfg.target.trajectory.ranges.frequency[1]})},
                   {"phase_range", json::array({cfg.target.trajectory.ranges.phase[0],
                                                cfg.target.trajectory.ranges.phase[1]})},
                   {"peak_velocity", cfg.target.trajectory.peak_velocity},
                   {"velocity", vec3(cfg.target.trajectory.velocity)},
                   {"cubic", json::array({cfg.target.trajectory.cubic[0], cfg.target.trajectory.cubic[1],
                                          cfg.target.trajectory.cubic[2], cfg.target.trajectory.cubic[3]})},
                   {"direction", vec3(cfg.target.trajectory.direction)},
                   {"extent", vec3(cfg.target.trajectory.extent)},
                   {"period", cfg.target.trajectory.period},
                   {"corner_sharpness", cfg.target.trajectory.corner_sharpness}}}};
  j["reward"] = {{"beta", cfg.reward.beta}, {"k_v", cfg.reward.k_v}, {"k_u", cfg.reward.k_u},
                 {"k_c", cfg.reward.k_c},   {"d_r", cfg.reward.d_r}, {"d_m", cfg.reward.d_m}};
  j["observation"] = {{"mode", to_string(cfg.observation.mode)}, {"history", cfg.observation.history}};
  j["detector"] = {{"pixel_noise", cfg.detector.pixel_sigma},
                   {"miss_probability", cfg.detector.miss_probability},
                   {"radius_jitter", cfg.detector.radius_jitter}};
  j["scene"] = {{"background", static_cast<int>(cfg.scene.background)},
                {"target_intensity", static_cast<int>(cfg.scene.target_intensity)},
                {"clutter_count", cfg.scene.clutter_count}};
  j["controller"] = {{"type", to_string(cfg.controller.type)},
                     {"lqg",
                      {{"position_weight", cfg.controller.lqg.weights.position},
                       {"velocity_weight", cfg.controller.lqg.weights.velocity},
                       {"effort_weight", cfg.controller.lqg.weights.effort},
                       {"process_accel_var", cfg.controller.lqg.process_accel_var},
                       {"meas_position_var", cfg.controller.lqg.meas_position_var},
                       {"attitude_gain", cfg.controller.lqg.attitude_gain},
                       {"drag_compensation", cfg.controller.lqg.drag_compensation}}},
                     {"pid",
                      {{"range", {{"kp", cfg.controller.pid.range.kp},
                                  {"ki", cfg.controller.pid.range.ki},
                                  {"kd", cfg.controller.pid.range.kd},
                                  {"integrator_limit", cfg.controller.pid.range.integrator_limit}}},
                       {"lateral", {{"kp", cfg.controller.pid.lateral.kp},
                                    {"ki", cfg.controller.pid.lateral.ki},
                                    {"kd", cfg.controller.pid.lateral.kd},
                                    {"integrator_limit", cfg.controller.pid.lateral.integrator_limit}}},
                       {"vertical", {{"kp", cfg.controller.pid.vertical.kp},
                                     {"ki", cfg.controller.pid.vertical.ki},
                                     {"kd", cfg.controller.pid.vertical.kd},
                                     {"integrator_limit", cfg.controller.pid.vertical.integrator_limit}}},
                       {"yaw_rate_gain", cfg.controller.pid.yaw_rate_gain},
                       {"attitude_gain", cfg.controller.pid.attitude_gain},
                       {"tilt_limit", cfg.controller.pid.tilt_limit},
                       {"deriv_tau", cfg.controller.pid.deriv_tau}}}};
  j["spawn"] = {{"box_half", cfg.spawn.box_half}, {"random_yaw", cfg.spawn.random_yaw}};
  j["termination"] = {{"collision_terminates", cfg.termination.collision_terminates},
                      {"target_lost_grace", cfg.termination.target_lost_grace
                                                ? json(*cfg.termination.target_lost_grace)
                                                : json(nullptr)}};
  return j;
}

EpisodeConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  return config_from_json(j);
}

std::string config_hash(const EpisodeConfig& cfg) {
  const std::uint64_t h = fnv1a64(to_json(cfg).dump());
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

bool operator==(const EpisodeConfig& a, const EpisodeConfig& b) { return to_json(a) == to_json(b); }

}  // namespace mavtrack

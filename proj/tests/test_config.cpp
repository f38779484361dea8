#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "mavtrack/config.hpp"

using namespace mavtrack;
using nlohmann::json;

TEST_CASE("empty config materializes the documented defaults") {
  const EpisodeConfig cfg = config_from_json(json::object());
  CHECK(cfg.dt == 0.02);
  CHECK(cfg.max_duration == 40.0);
  CHECK(cfg.reward.d_r == 0.5);
  CHECK(cfg.reward.d_m == 0.3);
  CHECK(cfg.reward.beta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(cfg.reward.k_v == 0.4);
  CHECK(cfg.reward.k_u == 0.4);
  CHECK(cfg.reward.k_c == 10.0);
  CHECK(cfg.camera.fov == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(cfg.dynamics.params.mass == 1.0);
  CHECK(cfg.dynamics.params.gravity.z() == 9.8);
  CHECK(cfg.dynamics.params.thrust_min == 0.1);
  CHECK(cfg.dynamics.params.thrust_max == 20.1);
  CHECK(cfg.dynamics.params.rate_limit == 4.0);
  CHECK(cfg.dynamics.params.thrust_gain == 20.0);
  CHECK(cfg.dynamics.params.rate_gain == 0.06);
  CHECK(cfg.dynamics.params.inertia(0, 0) == 0.0030);
  CHECK(cfg.dynamics.params.inertia(1, 1) == 0.0045);
  CHECK(cfg.dynamics.params.inertia(2, 2) == 0.0028);
  CHECK(cfg.dynamics.params.drag(0, 0) == 0.3);
  CHECK(cfg.dynamics.params.drag(2, 2) == 0.15);
  CHECK(cfg.target.trajectory.ranges.amplitude[0] == 1.0);
  CHECK(cfg.target.trajectory.ranges.amplitude[1] == 2.5);
  CHECK(cfg.target.trajectory.ranges.frequency[0] == 0.04);
  CHECK(cfg.target.trajectory.ranges.frequency[1] == 0.25);
  CHECK(cfg.observation.history == 3);
  CHECK(cfg.nominal_steps() == 2000);
}

TEST_CASE("negative mass names the offending key") {
  json j;
  j["dynamics"]["params"]["mass"] = -1.0;
  try {
    config_from_json(j);
    FAIL("should have thrown");
  } catch (const ConfigError& e) {
    REQUIRE(!e.issues().empty());
    CHECK(std::string(e.issues().front()).find("mass") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected with their paths") {
  json j;
  j["dynamics"]["turbo"] = true;
  j["frobnicate"] = 1;
  try {
    config_from_json(j);
    FAIL("should have thrown");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() == 2);
    bool saw_turbo = false, saw_frob = false;
    for (const auto& issue : e.issues()) {
      if (issue.find("dynamics.turbo") != std::string::npos) saw_turbo = true;
      if (issue.find("frobnicate") != std::string::npos) saw_frob = true;
    }
    CHECK(saw_turbo);
    CHECK(saw_frob);
  }
}

TEST_CASE("emit-then-load round-trips to an equal config") {
  json j;
  j["dt"] = 0.01;
  j["dynamics"]["model"] = "simple";
  j["target"]["trajectory"]["kind"] = "sinusoid_peak";
  j["target"]["trajectory"]["peak_velocity"] = 1.5;
  j["controller"]["type"] = "pid";
  j["observation"]["mode"] = "bboxes";
  j["detector"]["pixel_noise"] = 0.7;
  j["termination"]["target_lost_grace"] = 2.5;
  const EpisodeConfig a = config_from_json(j);
  const EpisodeConfig b = config_from_json(to_json(a));
  CHECK(a == b);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("controller and observation modes must be compatible") {
  json j;
  j["controller"]["type"] = "lqg";  // default observation mode is privileged
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j["observation"]["mode"] = "bboxes";
  CHECK_NOTHROW(config_from_json(j));

  json k;
  k["controller"]["type"] = "privileged_lqg";
  k["observation"]["mode"] = "frames";
  CHECK_THROWS_AS(config_from_json(k), ConfigError);
}

TEST_CASE("structural validation failures") {
  CHECK_THROWS_AS(config_from_json(json{{"dt", -0.1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"dt", "fast"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"camera", {{"fov", 4.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"reward", {{"d_m", 0.9}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"detector", {{"miss_probability", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"target", {{"trajectory", {{"kind", "warp"}}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"dynamics", {{"params", {{"thrust_limits", json::array({3.0, 1.0})}}}}}}),
                  ConfigError);
}

TEST_CASE("config hash is stable and sensitive") {
  const EpisodeConfig a = config_from_json(json::object());
  const EpisodeConfig b = config_from_json(json::object());
  CHECK(config_hash(a) == config_hash(b));
  EpisodeConfig c = a;
  c.dt = 0.01;
  CHECK(config_hash(a) != config_hash(c));
}

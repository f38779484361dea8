#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mavtrack/benchmark.hpp"
#include "mavtrack/harness.hpp"

using namespace mavtrack;
using nlohmann::json;

namespace {

EpisodeConfig base_config() { return config_from_json(json::object()); }

EpisodeConfig hover_static_config() {
  json j;
  j["controller"]["type"] = "hover";
  j["target"]["trajectory"]["kind"] = "setpoint";
  j["dynamics"]["model"] = "simple";
  j["spawn"]["box_half"] = 0.0;
  j["spawn"]["random_yaw"] = false;
  return config_from_json(j);
}

}  // namespace

TEST_CASE("hover policy against a static target is perfect tracking") {
  const EpisodeConfig cfg = hover_static_config();
  const EpisodeLog log = run_episode(cfg, 7);
  CHECK(log.reason == TerminationReason::completed);
  CHECK(static_cast<int>(log.records.size()) == cfg.nominal_steps());
  for (const auto& r : log.records) {
    CHECK(r.score.p_c == 1.0);
    CHECK(r.reward.r_e == 1.0);
    CHECK(std::abs(r.reward.total - (1.0 - cfg.reward.k_u * r.reward.r_u)) < 1e-12);
  }
}

TEST_CASE("same seed produces bit-identical logs") {
  json j;
  j["controller"]["type"] = "privileged_lqg";
  j["dynamics"]["randomize"] = true;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog a = run_episode(cfg, 42);
  const EpisodeLog b = run_episode(cfg, 42);
  CHECK(a.to_ndjson() == b.to_ndjson());
  const EpisodeLog c = run_episode(cfg, 43);
  CHECK(a.to_ndjson() != c.to_ndjson());
}

TEST_CASE("ndjson round-trips bit-exactly") {
  json j;
  j["controller"]["type"] = "lqg";
  j["observation"]["mode"] = "bboxes";
  j["detector"]["pixel_noise"] = 0.5;
  j["max_duration"] = 4.0;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 5);
  const std::string text = log.to_ndjson();
  const EpisodeLog parsed = EpisodeLog::from_ndjson(text);
  CHECK(parsed.to_ndjson() == text);
  CHECK(parsed.records.size() == log.records.size());
  CHECK(parsed.seed == log.seed);
}

TEST_CASE("log self-consistency: rewards and scores recompute from states") {
  json j;
  j["controller"]["type"] = "privileged_lqg";
  j["max_duration"] = 8.0;
  j["target"]["trajectory"]["kind"] = "sinusoid_peak";
  j["target"]["trajectory"]["peak_velocity"] = 1.0;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 11);
  REQUIRE(!log.records.empty());
  for (const auto& r : log.records) {
    const Vec3d accel = body_acceleration(r.tracker, cfg.dynamics.params);
    const RelativeStated rel =
        relative_state(r.tracker.base, accel, r.target_p, r.target_v, r.target_a);
    const auto reward = total_reward(rel.y, rel.v, normalize_command(r.command, cfg.dynamics.params), cfg.reward);
    CHECK(std::abs(reward.total - r.reward.total) < 1e-12);
    CHECK(std::abs(reward.r_e - r.reward.r_e) < 1e-12);
    const auto sph = spherical(rel.y);
    const auto score = score_sample(sph.rho, sph.theta, sph.phi, ScoreConfigd{cfg.reward.d_r, cfg.camera.fov});
    CHECK(std::abs(score.p_c - r.score.p_c) < 1e-12);
  }
}

TEST_CASE("a target driving through a hovering tracker collides and scores -k_c") {
  json j;
  j["controller"]["type"] = "hover";
  j["target"]["trajectory"]["kind"] = "ramp";
  j["target"]["trajectory"]["velocity"] = json::array({-0.5, 0.0, 0.0});  // straight at the tracker
  j["spawn"]["box_half"] = 0.0;
  j["spawn"]["random_yaw"] = false;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 3);
  CHECK(log.reason == TerminationReason::collision);
  REQUIRE(!log.records.empty());
  CHECK(log.records.back().reward.collided);
  CHECK(log.records.back().reward.total == -10.0);
  CHECK(static_cast<int>(log.records.size()) < cfg.nominal_steps());
}

TEST_CASE("collision termination is configurable") {
  json j;
  j["controller"]["type"] = "hover";
  j["target"]["trajectory"]["kind"] = "ramp";
  j["target"]["trajectory"]["velocity"] = json::array({-0.5, 0.0, 0.0});
  j["spawn"]["box_half"] = 0.0;
  j["termination"]["collision_terminates"] = false;
  j["max_duration"] = 5.0;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 3);
  CHECK(log.reason == TerminationReason::completed);
  CHECK(static_cast<int>(log.records.size()) == cfg.nominal_steps());
}

TEST_CASE("target-lost grace period ends the episode") {
  json j;
  j["controller"]["type"] = "hover";
  j["target"]["trajectory"]["kind"] = "ramp";
  j["target"]["trajectory"]["velocity"] = json::array({0.0, 2.0, 0.0});  // exits the fov sideways
  j["spawn"]["box_half"] = 0.0;
  j["spawn"]["random_yaw"] = false;
  j["termination"]["target_lost_grace"] = 1.0;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 3);
  CHECK(log.reason == TerminationReason::target_lost);
  CHECK(static_cast<int>(log.records.size()) < cfg.nominal_steps());
}

TEST_CASE("padded scores keep the nominal denominator") {
  json j;
  j["controller"]["type"] = "hover";
  j["target"]["trajectory"]["kind"] = "ramp";
  j["target"]["trajectory"]["velocity"] = json::array({-0.5, 0.0, 0.0});
  j["spawn"]["box_half"] = 0.0;
  const EpisodeConfig cfg = config_from_json(j);
  const EpisodeLog log = run_episode(cfg, 3);
  const auto padded = log.padded_scores();
  CHECK(static_cast<int>(padded.size()) == cfg.nominal_steps());
  CHECK(padded.back().p_c == 0.0);
}

TEST_CASE("aborting policies yield a partial aborted log") {
  const EpisodeConfig cfg = hover_static_config();
  int calls = 0;
  const Policy flaky = [&](const Observation&) -> Commandd {
    if (++calls > 10) throw std::runtime_error("policy crashed");
    return Commandd{9.8, Vec3d::Zero()};
  };
  const EpisodeLog log = run_episode_with_policy(cfg, 1, flaky);
  CHECK(log.reason == TerminationReason::aborted);
  CHECK(log.records.size() == 10);
}

TEST_CASE("observation modes fill their payloads") {
  json j;
  j["controller"]["type"] = "hover";
  j["observation"]["mode"] = "frames";
  j["scene"]["clutter_count"] = 3;
  j["max_duration"] = 0.2;
  const EpisodeConfig cfg = config_from_json(j);
  Environment env(cfg);
  const Observation& obs = env.reset(9);
  REQUIRE(static_cast<int>(obs.frames.size()) == cfg.observation.history);
  CHECK(obs.frames[0] == obs.frames[1]);  // padded by repetition
  CHECK(obs.frames[0].width == cfg.camera.width);

  env.step(Commandd{9.8, Vec3d::Zero()});
  CHECK(env.observation().step == 1);

  // static clutter: background pixels identical across steps
  CHECK(env.observation().frames[0].data.size() == obs.frames[0].data.size());
}

TEST_CASE("external pose steps bypass the dynamics") {
  const EpisodeConfig cfg = hover_static_config();
  Environment env(cfg);
  env.reset(4);
  Environment::ExternalPose pose;
  pose.p = Vec3d(0.1, 0.0, 0.0);  // target sits at (0.5, 0, 0) in the world
  const auto res = env.step_external(pose, Commandd{9.8, Vec3d::Zero()});
  CHECK((env.state().base.p - pose.p).norm() == 0.0);
  CHECK(res.score.p_rho == doctest::Approx(1.0 - 2 * 0.1).epsilon(1e-12));

  Environment::ExternalPose bad;
  bad.p = Vec3d(std::nan(""), 0, 0);
  CHECK_THROWS_AS(env.step_external(bad, std::nullopt), std::invalid_argument);
}

TEST_CASE("benchmark tables are deterministic and parallel-invariant") {
  json cell;
  cell["controller"]["type"] = "privileged_lqg";
  cell["max_duration"] = 2.0;
  cell["target"]["trajectory"]["kind"] = "sinusoid_peak";
  cell["target"]["trajectory"]["peak_velocity"] = 0.5;

  BenchSuite suite;
  suite.runs = 4;
  suite.seed0 = 100;
  suite.cells.push_back({"cell-a", config_from_json(cell)});
  cell["target"]["trajectory"]["peak_velocity"] = 1.0;
  suite.cells.push_back({"cell-b", config_from_json(cell)});

  const auto serial = run_benchmark(suite, 1);
  const auto parallel = run_benchmark(suite, 4);
  CHECK(scores_csv(serial) == scores_csv(parallel));
  CHECK(scores_csv(serial).find("cell-a") != std::string::npos);
  CHECK(scores_markdown(serial).find("cell-b") != std::string::npos);

  BenchSuite empty;
  CHECK_THROWS_AS(run_benchmark(empty, 1), std::invalid_argument);
}

TEST_CASE("wall clock: a 40 s privileged episode finishes quickly") {
  json j;
  j["controller"]["type"] = "privileged_lqg";
  j["target"]["trajectory"]["kind"] = "sinusoid_peak";
  j["target"]["trajectory"]["peak_velocity"] = 0.5;
  const EpisodeConfig cfg = config_from_json(j);
  const auto t0 = std::chrono::steady_clock::now();
  const EpisodeLog log = run_episode(cfg, 21);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(log.reason == TerminationReason::completed);
  CHECK(dt < 2.0);
}

TEST_CASE("csv export has one row per record with full precision") {
  const EpisodeConfig cfg = hover_static_config();
  EpisodeLog log = run_episode(cfg, 2);
  const std::string csv = log.to_csv();
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == static_cast<long>(log.records.size()) + 1);
  CHECK(csv.rfind("step,t,px,py,pz,", 0) == 0);
  CHECK(csv.find("p_c") != std::string::npos);
}

TEST_CASE("privileged velocity sweep declines monotonically in P_c") {
  const auto cell = [](double v_peak) {
    json c;
    c["controller"]["type"] = "privileged_lqg";
    c["target"]["trajectory"]["kind"] = "sinusoid_peak";
    c["target"]["trajectory"]["peak_velocity"] = v_peak;
    return config_from_json(c);
  };
  BenchSuite suite;
  suite.runs = 20;
  suite.seed0 = 1000;
  suite.cells = {{"0.5", cell(0.5)}, {"1.0", cell(1.0)}, {"2.0", cell(2.0)}};
  const auto results = run_benchmark(suite, 4);
  REQUIRE(results.size() == 3);
  CHECK(results[0].table.p_c > results[1].table.p_c);
  CHECK(results[1].table.p_c > results[2].table.p_c);
  CHECK(results[0].table.runs == 20);
}

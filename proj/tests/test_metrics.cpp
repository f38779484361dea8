#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mavtrack/metrics.hpp"
#include "mavtrack/reward.hpp"
#include "mavtrack/rng.hpp"

using namespace mavtrack;

TEST_CASE("score sample worked examples") {
  const ScoreConfigd cfg;

  SUBCASE("perfect tracking scores 1 everywhere") {
    const auto s = score_sample(0.5, 0.0, 0.0, cfg);
    CHECK(s.p_rho == 1.0);
    CHECK(s.p_theta == 1.0);
    CHECK(s.p_phi == 1.0);
    CHECK(s.p_c == 1.0);
  }

  SUBCASE("linear distance falloff") {
    const auto s = score_sample(0.75, 0.0, 0.0, cfg);
    CHECK(std::abs(s.p_rho - 0.5) < 1e-15);
    CHECK(s.p_theta == 1.0);
    CHECK(s.p_phi == 1.0);
    CHECK(std::abs(s.p_c - 5.0 / 6.0) < 1e-15);
  }

  SUBCASE("azimuth at the fov edge gates everything") {
    const auto s = score_sample(0.5, 0.0, cfg.fov / 2, cfg);
    CHECK(s.p_rho == 0.0);
    CHECK(s.p_theta == 0.0);
    CHECK(s.p_phi == 0.0);
  }

  SUBCASE("mean identity holds to 1e-12") {
    RngStream rng(2);
    for (int i = 0; i < 20000; ++i) {
      const auto s = score_sample(rng.uniform(0, 2), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), cfg);
      CHECK(s.p_rho >= 0.0);
      CHECK(s.p_rho <= 1.0);
      CHECK(s.p_theta >= 0.0);
      CHECK(s.p_theta <= 1.0);
      CHECK(s.p_phi >= 0.0);
      CHECK(s.p_phi <= 1.0);
      CHECK(std::abs(s.p_c - (s.p_rho + s.p_theta + s.p_phi) / 3.0) < 1e-12);
    }
  }

  SUBCASE("monotone non-increasing where the gates hold") {
    double prev = 2.0;
    for (double th : {0.0, 0.1, 0.3, 0.5, 0.7}) {
      const auto s = score_sample(0.5, th, 0.0, cfg);
      CHECK(s.p_theta <= prev);
      prev = s.p_theta;
    }
    prev = 2.0;
    for (double drho : {0.0, 0.05, 0.15, 0.3, 0.45}) {
      const auto s = score_sample(0.5 + drho, 0.0, 0.0, cfg);
      CHECK(s.p_rho <= prev);
      prev = s.p_rho;
    }
  }

  SUBCASE("negative rho is rejected") {
    CHECK_THROWS_AS(score_sample(-0.1, 0.0, 0.0, cfg), std::invalid_argument);
  }
}

TEST_CASE("reward and metric perfection coincide on the optical axis") {
  const ScoreConfigd scfg;
  const RewardConfigd rcfg;
  const auto s = score_sample(rcfg.d_r, 0.0, 0.0, scfg);
  const auto tt = tracking_terms(Vec3d(rcfg.d_r, 0, 0), rcfg);
  CHECK(s.p_c == 1.0);
  CHECK(tt.r_e == 1.0);
  for (double x : {0.3, 0.4, 0.6, 0.9}) {
    const auto s2 = score_sample(x, 0.0, 0.0, scfg);
    const auto t2 = tracking_terms(Vec3d(x, 0, 0), rcfg);
    CHECK(((s2.p_c == 1.0) == (t2.r_e == 1.0)));
  }
}

TEST_CASE("aggregation") {
  SUBCASE("single constant run") {
    std::vector<std::vector<ScoreSampled>> runs(1);
    const ScoreSampled s{0.4, 0.6, 0.8, 0.6};
    runs[0].assign(17, s);
    const auto table = aggregate(runs);
    CHECK(table.p_rho == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(table.p_theta == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(table.p_phi == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(table.runs == 1);
    CHECK(table.steps == 17);
  }

  SUBCASE("two equal-length runs of ones and zeros average to 0.5") {
    std::vector<std::vector<ScoreSampled>> runs(2);
    runs[0].assign(40, ScoreSampled{1, 1, 1, 1});
    runs[1].assign(40, ScoreSampled{0, 0, 0, 0});
    const auto table = aggregate(runs);
    CHECK(table.p_c == 0.5);
    CHECK(table.p_rho == 0.5);
  }

  SUBCASE("random tables match a brute-force double loop to 1e-12") {
    RngStream rng(33);
    for (int rep = 0; rep < 50; ++rep) {
      const int n_runs = rng.uniform_int(1, 8);
      std::vector<std::vector<ScoreSampled>> runs(n_runs);
      for (auto& run : runs) {
        const int n = rng.uniform_int(1, 200);
        for (int i = 0; i < n; ++i)
          run.push_back(ScoreSampled{rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()});
      }
      const auto table = aggregate(runs);

      double brute = 0.0;
      for (const auto& run : runs) {
        double acc = 0.0;
        for (const auto& s : run) acc += s.p_c;
        brute += acc / run.size();
      }
      brute /= runs.size();
      CHECK(std::abs(table.p_c - brute) < 1e-12);
    }
  }

  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(aggregate<double>({}), std::invalid_argument);
    std::vector<std::vector<ScoreSampled>> runs(1);
    CHECK_THROWS_AS(aggregate(runs), std::invalid_argument);
  }
}

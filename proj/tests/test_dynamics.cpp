#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mavtrack/dynamics.hpp"

using namespace mavtrack;

namespace {

Commandd sinusoid_command(double t) {
  Commandd cmd;
  cmd.thrust = 9.8 + 3.0 * std::sin(0.8 * t);
  cmd.rates = Vec3d(0.5 * std::sin(0.9 * t), 0.4 * std::cos(0.7 * t), 0.3 * std::sin(0.5 * t));
  return cmd;
}

// Reference attitude/rate integration straight from q_dot = q (0, w/2),
// w_dot = J^-1 (k_w (w_cmd - w) - w x J w); independent of the
// rotation-vector chart used by the implementation.
struct QuatOmega {
  Quatd q;
  Vec3d w;
};

QuatOmega reference_attitude_step(QuatOmega s, const Commandd& cmd, const VehicleParamsd& params,
                                  double dt, bool rate_dynamics) {
  const Mat3d inertia_inv = params.inertia.inverse();
  const auto rhs = [&](const QuatOmega& x) {
    QuatOmega d;
    const Quatd wq(0.0, x.w.x() / 2, x.w.y() / 2, x.w.z() / 2);
    d.q = x.q * wq;
    d.w = rate_dynamics
              ? Vec3d(inertia_inv * (params.rate_gain * (cmd.rates - x.w) - x.w.cross(params.inertia * x.w)))
              : Vec3d::Zero();
    return d;
  };
  const auto add = [](const QuatOmega& a, const QuatOmega& b, double s) {
    QuatOmega out;
    out.q.coeffs() = a.q.coeffs() + s * b.q.coeffs();
    out.w = a.w + s * b.w;
    return out;
  };
  const QuatOmega k1 = rhs(s);
  const QuatOmega k2 = rhs(add(s, k1, dt / 2));
  const QuatOmega k3 = rhs(add(s, k2, dt / 2));
  const QuatOmega k4 = rhs(add(s, k3, dt));
  QuatOmega out = s;
  out.q.coeffs() += dt / 6 * (k1.q.coeffs() + 2 * k2.q.coeffs() + 2 * k3.q.coeffs() + k4.q.coeffs());
  out.w += dt / 6 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w);
  out.q.normalize();
  return out;
}

}  // namespace

TEST_CASE("hover thrust is a fixed point of the simple model") {
  const VehicleParamsd params;
  VehicleStated s;
  Commandd cmd;
  cmd.thrust = params.mass * params.gravity.norm();
  for (int i = 0; i < 50; ++i) s = step_simple(s, cmd, params, 0.02);
  CHECK(s.p.norm() < 1e-12);
  CHECK(s.v.norm() < 1e-12);
}

TEST_CASE("hover fixed point holds for a float instantiation") {
  const VehicleParams<float> params;
  VehicleState<float> s;
  Command<float> cmd;
  cmd.thrust = params.mass * params.gravity.norm();
  s = step_simple(s, cmd, params, 0.02f);
  CHECK(s.p.norm() < 1e-6f);
}

TEST_CASE("free fall matches the ballistic closed form") {
  VehicleParamsd params;
  params.thrust_min = 0.0;  // allow zero thrust
  VehicleStated s;
  Commandd cmd;
  cmd.thrust = 0.0;
  for (int i = 0; i < 50; ++i) s = step_simple(s, cmd, params, 0.02);
  CHECK(std::abs(s.p.z() + 4.9) < 1e-6);
  CHECK(std::abs(s.p.x()) < 1e-12);
}

TEST_CASE("yaw spin leaves the thrust axis and position unchanged") {
  const VehicleParamsd params;
  VehicleStated s;
  Commandd cmd;
  cmd.thrust = 9.8;
  cmd.rates = Vec3d(0, 0, 1);
  const int n = 200;
  const double dt = std::numbers::pi / n;
  for (int i = 0; i < n; ++i) s = step_simple(s, cmd, params, dt);
  CHECK(s.p.norm() < 1e-9);
  const Quatd expected(std::cos(std::numbers::pi / 2), 0, 0, std::sin(std::numbers::pi / 2));
  CHECK(rotation_distance(s.q, expected) < 1e-9);
}

TEST_CASE("non-finite inputs are rejected with a diagnostic") {
  const VehicleParamsd params;
  VehicleStated s;
  Commandd cmd;
  cmd.thrust = 9.8;
  CHECK_THROWS_AS(step_simple(s, cmd, params, 0.0), std::invalid_argument);
  s.p.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step_simple(s, cmd, params, 0.02), std::invalid_argument);
  s.p.x() = 0.0;
  cmd.rates.y() = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(step_simple(s, cmd, params, 0.02), std::invalid_argument);
  AugmentedVehicleStated a;
  a.f = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step_augmented(a, Commandd{9.8, Vec3d::Zero()}, params, 0.02), std::invalid_argument);
}

TEST_CASE("augmented equilibrium is a fixed point") {
  const VehicleParamsd params;
  AugmentedVehicleStated s;
  s.f = 9.8;
  Commandd cmd;
  cmd.thrust = 9.8;
  for (int i = 0; i < 100; ++i) {
    const auto next = step_augmented(s, cmd, params, 0.02);
    CHECK((next.base.p - s.base.p).norm() < 1e-9);
    CHECK(next.omega.norm() < 1e-12);
    s = next;
  }
  CHECK(s.base.v.norm() < 1e-9);
}

TEST_CASE("thrust loop follows the first-order closed form") {
  const VehicleParamsd params;  // k_f = 20
  AugmentedVehicleStated s;
  s.f = 0.1;
  Commandd cmd;
  cmd.thrust = 20.1;
  const double dt = 0.001;
  for (int i = 0; i < 50; ++i) s = step_augmented(s, cmd, params, dt);
  const double expected = 20.1 + (0.1 - 20.1) * std::exp(-params.thrust_gain * 0.05);
  CHECK(std::abs(expected - 12.742411176571153) < 1e-12);  // sanity on the frozen value
  CHECK(std::abs(s.f - expected) < 1e-6);
}

TEST_CASE("augmented 5 s trajectory matches a 100x finer ZOH reference") {
  const VehicleParamsd params;
  const double dt = 0.02;
  const int steps = 250;

  AugmentedVehicleStated coarse, fine;
  coarse.f = fine.f = 9.8;
  for (int k = 0; k < steps; ++k) {
    const Commandd cmd = sinusoid_command(k * dt);
    coarse = step_augmented(coarse, cmd, params, dt);
    for (int j = 0; j < 100; ++j) fine = step_augmented(fine, cmd, params, dt / 100);
  }
  CHECK((coarse.base.p - fine.base.p).norm() < 1e-5);
  Eigen::Vector4d dq = coarse.base.q.coeffs() - fine.base.q.coeffs();
  if (coarse.base.q.coeffs().dot(fine.base.q.coeffs()) < 0) dq = coarse.base.q.coeffs() + fine.base.q.coeffs();
  CHECK(dq.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("attitude kinematics agree with a direct quaternion-ODE oracle") {
  const VehicleParamsd params;
  RngStream rng(7);

  SUBCASE("simple model, piecewise-constant rates") {
    VehicleStated s;
    QuatOmega ref{Quatd::Identity(), Vec3d::Zero()};
    for (int k = 0; k < 50; ++k) {
      Commandd cmd;
      cmd.thrust = 9.8;
      for (int i = 0; i < 3; ++i) cmd.rates[i] = rng.uniform(-4.0, 4.0);
      s = step_simple(s, cmd, params, 0.02);
      ref.w = cmd.rates;
      for (int j = 0; j < 2000; ++j) ref = reference_attitude_step(ref, cmd, params, 1e-5, false);
      CHECK(rotation_distance(s.q, ref.q) < 1e-8);
    }
  }

  SUBCASE("augmented model, rate-loop dynamics") {
    AugmentedVehicleStated s;
    s.f = 9.8;
    QuatOmega ref{Quatd::Identity(), Vec3d::Zero()};
    Commandd cmd;
    cmd.thrust = 9.8;
    cmd.rates = Vec3d(1.5, -2.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      s = step_augmented(s, cmd, params, 0.005);
      for (int j = 0; j < 500; ++j) ref = reference_attitude_step(ref, cmd, params, 1e-5, true);
    }
    CHECK(rotation_distance(s.base.q, ref.q) < 1e-8);
    CHECK((s.omega - ref.w).norm() < 1e-8);
  }
}

TEST_CASE("parameter randomization honors bounds, determinism and identity") {
  const VehicleParamsd nominal;
  RandomizationConfig<double> cfg;

  SUBCASE("zero fraction is the identity") {
    cfg.fraction = 0.0;
    RngStream rng(3);
    const auto out = randomize_params(nominal, cfg, rng);
    CHECK(out.mass == nominal.mass);
    CHECK(out.thrust_gain == nominal.thrust_gain);
    CHECK(out.rate_gain == nominal.rate_gain);
    CHECK((out.inertia - nominal.inertia).norm() == 0.0);
  }

  SUBCASE("bounds over many draws") {
    RngStream rng(11);
    for (int i = 0; i < 100000; ++i) {
      const auto out = randomize_params(nominal, cfg, rng);
      CHECK(out.mass >= 0.9);
      CHECK(out.mass <= 1.1);
      CHECK(4.0 / out.thrust_gain <= cfg.max_settling_time + 1e-12);
      CHECK(out.thrust_gain <= nominal.thrust_gain);
      CHECK(out.rate_gain <= nominal.rate_gain);
      CHECK(out.rate_gain >= 0.9 * nominal.rate_gain);
      CHECK(out.gravity.norm() >= 0.9 * 9.8);
      CHECK(out.gravity.norm() <= 1.1 * 9.8 + 1e-12);
      for (int j = 0; j < 3; ++j) {
        CHECK(out.inertia(j, j) >= 0.9 * nominal.inertia(j, j));
        CHECK(out.inertia(j, j) <= 1.1 * nominal.inertia(j, j));
      }
    }
  }

  SUBCASE("same seed gives identical parameters") {
    RngStream a(42), b(42);
    const auto pa = randomize_params(nominal, cfg, a);
    const auto pb = randomize_params(nominal, cfg, b);
    CHECK(pa.mass == pb.mass);
    CHECK(pa.thrust_gain == pb.thrust_gain);
    CHECK((pa.inertia - pb.inertia).norm() == 0.0);
    CHECK((pa.drag - pb.drag).norm() == 0.0);
  }
}

TEST_CASE("body acceleration matches states and a finite-difference oracle") {
  const VehicleParamsd params;

  SUBCASE("hover gives zero") {
    VehicleStated s;
    CHECK(body_acceleration(s, params.mass * params.gravity.norm(), params).norm() < 1e-12);
  }

  SUBCASE("rest with zero thrust gives -g") {
    AugmentedVehicleStated s;
    s.f = 0.0;
    CHECK((body_acceleration(s, params) - Vec3d(0, 0, -9.8)).norm() < 1e-12);
  }

  SUBCASE("centered finite difference of simulated velocity") {
    AugmentedVehicleStated s;
    s.base.p = Vec3d(0.3, -0.2, 1.0);
    s.base.v = Vec3d(0.5, 0.2, -0.4);
    s.base.q = quat_exp(Vec3d(0.2, -0.3, 0.4));
    s.omega = Vec3d(0.4, 0.1, -0.2);
    s.f = 11.0;
    Commandd cmd;
    cmd.thrust = 11.2;
    cmd.rates = Vec3d(0.5, 0.0, -0.1);

    const double h = 3e-5;
    const auto s1 = step_augmented(s, cmd, params, h);
    const auto s2 = step_augmented(s1, cmd, params, h);
    const Vec3d fd = (s2.base.v - s.base.v) / (2 * h);
    CHECK((body_acceleration(s1, params) - fd).norm() < 1e-6);
  }
}

TEST_CASE("quaternion norm stays within 1e-9 over 1e5 random steps") {
  const VehicleParamsd params;
  RngStream rng(5);
  VehicleStated s;
  for (int i = 0; i < 100000; ++i) {
    Commandd cmd;
    cmd.thrust = rng.uniform(0.1, 20.1);
    for (int j = 0; j < 3; ++j) cmd.rates[j] = rng.uniform(-4.0, 4.0);
    s = step_simple(s, cmd, params, 0.02);
  }
  CHECK(std::abs(s.q.norm() - 1.0) < 1e-9);

  AugmentedVehicleStated a;
  a.f = 9.8;
  RngStream rng2(6);
  for (int i = 0; i < 20000; ++i) {
    Commandd cmd;
    cmd.thrust = rng2.uniform(0.1, 20.1);
    for (int j = 0; j < 3; ++j) cmd.rates[j] = rng2.uniform(-4.0, 4.0);
    a = step_augmented(a, cmd, params, 0.02);
  }
  CHECK(std::abs(a.base.q.norm() - 1.0) < 1e-9);
}

TEST_CASE("augmented model approaches the simple model at large gains") {
  VehicleParamsd stiff;
  stiff.thrust_gain = 1e6;
  stiff.rate_gain = 1e3;
  stiff.drag.setZero();
  const VehicleParamsd params;  // simple model ignores actuator gains and drag

  VehicleStated simple;
  AugmentedVehicleStated augmented;
  augmented.f = sinusoid_command(0.0).thrust;
  const double dt = 0.02;
  for (int k = 0; k < 100; ++k) {
    const Commandd cmd = sinusoid_command(k * dt);
    simple = step_simple(simple, cmd, params, dt);
    augmented = step_augmented(augmented, cmd, stiff, dt);
  }
  CHECK((simple.p - augmented.base.p).norm() < 1e-3);
}

TEST_CASE("translation error decays at observed order >= 3.5") {
  const VehicleParamsd params;
  Commandd cmd;
  cmd.thrust = 12.0;
  cmd.rates = Vec3d(1.5, -1.0, 2.0);

  const auto end_position = [&](double dt) {
    VehicleStated s;
    const int n = static_cast<int>(std::round(1.0 / dt));
    for (int i = 0; i < n; ++i) s = step_simple(s, cmd, params, dt);
    return s.p;
  };
  const Vec3d ref = end_position(1e-5);

  std::vector<double> errors;
  for (double dt : {0.04, 0.02, 0.01, 0.005}) errors.push_back((end_position(dt) - ref).norm());
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double order = std::log2(errors[i] / errors[i + 1]);
    CHECK(order >= 3.5);
  }
}

TEST_CASE("commands outside the limits saturate to the clamped trajectory") {
  const VehicleParamsd params;
  Commandd wild;
  wild.thrust = 25.0;
  wild.rates = Vec3d(5.0, -7.0, 4.5);
  Commandd clamped;
  clamped.thrust = 20.1;
  clamped.rates = Vec3d(4.0, -4.0, 4.0);

  VehicleStated a, b;
  AugmentedVehicleStated aa, ab;
  aa.f = ab.f = 9.8;
  for (int i = 0; i < 25; ++i) {
    a = step_simple(a, wild, params, 0.02);
    b = step_simple(b, clamped, params, 0.02);
    aa = step_augmented(aa, wild, params, 0.02);
    ab = step_augmented(ab, clamped, params, 0.02);
  }
  CHECK((a.p - b.p).norm() == 0.0);
  CHECK((a.q.coeffs() - b.q.coeffs()).norm() == 0.0);
  CHECK((aa.base.p - ab.base.p).norm() == 0.0);
  CHECK(aa.f == ab.f);
}

TEST_CASE("so3 helpers: exp/log inverses and euler extraction") {
  RngStream rng(13);
  for (int i = 0; i < 2000; ++i) {
    const Vec3d v(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    if (v.norm() >= 3.1) continue;  // stay below pi
    const Quatd q = quat_exp(v);
    CHECK(std::abs(q.norm() - 1.0) < 1e-14);
    CHECK((quat_log(q) - v).norm() < 1e-10 * (1 + v.norm()));
  }
  // exp matches the matrix exponential direction convention
  const Quatd yaw90 = quat_exp(Vec3d(0, 0, std::numbers::pi / 2));
  CHECK((yaw90 * Vec3d::UnitX() - Vec3d::UnitY()).norm() < 1e-12);

  const Vec3d rpy = euler_zyx(quat_exp(Vec3d(0, 0, 0.7)) * quat_exp(Vec3d(0, 0.4, 0)) *
                              quat_exp(Vec3d(0.2, 0, 0)));
  CHECK(std::abs(rpy[0] - 0.2) < 1e-12);
  CHECK(std::abs(rpy[1] - 0.4) < 1e-12);
  CHECK(std::abs(rpy[2] - 0.7) < 1e-12);

  const Mat3d s = skew(Vec3d(1, 2, 3));
  CHECK((s + s.transpose()).norm() == 0.0);
  CHECK((s * Vec3d(4, 5, 6) - Vec3d(1, 2, 3).cross(Vec3d(4, 5, 6))).norm() == 0.0);
}

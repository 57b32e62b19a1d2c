#include <doctest.h>

#include <cmath>

#include "latlab/attacks.hpp"
#include "oracles.hpp"

using namespace latlab;

namespace {

VehicleParams table1() {
  VehicleParams p;
  p.m = 1412.0;
  p.Iz = 1536.7;
  p.a = 1.015;
  p.b = 1.895;
  p.Cf = 58400.0;
  p.Cr = 40400.0;
  p.vx = 16.67;
  p.convention = StiffnessConvention::PerAxle;
  return p;
}

}  // namespace

TEST_CASE("rosenbrock matrix layout") {
  const LateralModel m = build_state_space(table1());
  const OutputMap yaw = output_map(m, OutputCase::YawRate);
  const cplx s(1.5, -0.5);
  const CMat p = rosenbrock(m, yaw.C, s);
  REQUIRE(p.rows() == 3);
  REQUIRE(p.cols() == 3);
  CHECK(p(0, 0) == s - cplx(m.A(0, 0)));
  CHECK(p(0, 1) == cplx(-m.A(0, 1)));
  CHECK(p(1, 2) == cplx(-m.B(1)));
  CHECK(p(0, 2) == cplx(0.0));
  CHECK(p(2, 0) == cplx(0.0));
  CHECK(p(2, 1) == cplx(1.0));
  CHECK(p(2, 2) == cplx(0.0));

  const OutputMap both = output_map(m, OutputCase::Combined);
  CHECK(rosenbrock(m, both.C, s).rows() == 4);
}

TEST_CASE("yaw-rate zero sits at a11") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  ZdaConfig cfg;
  cfg.amplitude = 0.5;
  const auto plan = zda_synthesize_linear(m, map, cfg);
  REQUIRE(plan.has_value());
  CHECK(plan->s0.real() == doctest::Approx(-4.1974607911278934).epsilon(1e-13));
  CHECK(plan->s0.imag() == 0.0);

  // independent determinant check at the claimed zero
  const Eigen::Matrix3cd p = rosenbrock(m, map.C, plan->s0);
  CHECK(std::abs(oracle::det3(p)) <= 1e-12);

  // direction scaled to the requested offset, phase-aligned to the real axis
  CHECK(plan->x0(0).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(plan->x0(0).imag()) <= 1e-12);
  CHECK(std::abs(plan->x0(1)) <= 1e-9);
  CHECK(plan->a0.real() == doctest::Approx(-518.35632873425334).epsilon(1e-9));
}

TEST_CASE("lateral-accel zero matches the closed form") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::LateralAccel);
  const auto plan = zda_synthesize_linear(m, map, {});
  REQUIRE(plan.has_value());
  CHECK(plan->s0.real() == doctest::Approx(-95.301238282606235).epsilon(1e-12));
  CHECK(plan->s0.imag() == 0.0);
  const Eigen::Matrix3cd p = rosenbrock(m, map.C, plan->s0);
  CHECK(std::abs(oracle::det3(p)) <= 1e-10);
  CHECK(std::abs(plan->x0.norm() - 0.5) <= 1e-12);
}

TEST_CASE("combined outputs leave no zero anywhere") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::Combined);
  CHECK(!zda_synthesize_linear(m, map, {}).has_value());

  // even the eigenvalue candidates keep full column rank
  const auto [lo, hi] = oracle::quadratic_eigs(m.A);
  CHECK(rank_with_tol(rosenbrock(m, map.C, lo)) == 3);
  CHECK(rank_with_tol(rosenbrock(m, map.C, hi)) == 3);
  CHECK(rank_with_tol(rosenbrock(m, map.C, cplx(0.0, 0.0))) == 3);
}

TEST_CASE("zda injection signal") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  ZdaConfig cfg;
  cfg.t0 = 2.0;
  const auto plan = zda_synthesize_linear(m, map, cfg);
  REQUIRE(plan.has_value());
  CHECK(zda_input(*plan, 2.0) == plan->a0.real());
  const double ratio = zda_input(*plan, 3.0) / zda_input(*plan, 2.0);
  CHECK(ratio == doctest::Approx(std::exp(plan->s0.real())).epsilon(1e-12));
}

TEST_CASE("nonlinear zero dynamics branches") {
  const LateralModel m = build_state_space(table1());
  const double a21 = m.A(1, 0), b2 = m.B(1);

  const NonlinearZdaPlan z1 = zda_synthesize_nonlinear(m, Vec2(0.3, 0.0), 1.0);
  CHECK(z1.branch == ZdaBranch::Z1);
  CHECK(z1.m1_bar == doctest::Approx(-(a21 / b2) * 0.3).epsilon(1e-12));
  CHECK(z1.t0 == 1.0);
  // feedforward decays with a11 from t0
  CHECK(zda_nonlinear_input(z1, 1.0) == doctest::Approx(z1.m1_bar).epsilon(1e-15));
  CHECK(zda_nonlinear_input(z1, 2.0) ==
        doctest::Approx(z1.m1_bar * std::exp(m.A(0, 0))).epsilon(1e-12));

  const NonlinearZdaPlan z2 = zda_synthesize_nonlinear(m, Vec2(0.0, 0.2), 0.0);
  CHECK(z2.branch == ZdaBranch::Z2);
  CHECK_THROWS_AS(zda_nonlinear_input(z2, 0.0), BranchUnsupportedError);

  const NonlinearZdaPlan off = zda_synthesize_nonlinear(m, Vec2(0.1, 0.2), 0.0);
  CHECK(off.branch == ZdaBranch::OffManifold);
  CHECK_THROWS_AS(zda_nonlinear_input(off, 0.0), BranchUnsupportedError);

  // v_y = r = 0 is on both manifolds; the r = 0 branch wins and injects nothing
  const NonlinearZdaPlan origin = zda_synthesize_nonlinear(m, Vec2::Zero(), 0.0);
  CHECK(origin.branch == ZdaBranch::Z1);
  CHECK(origin.m1_bar == 0.0);
}

TEST_CASE("feedback form of the nonlinear injection") {
  const LateralModel m = build_state_space(table1());
  CHECK(zda_nonlinear_feedback(m, 0.3) ==
        doctest::Approx(-(m.A(1, 0) / m.B(1)) * 0.3).epsilon(1e-15));
  CHECK(zda_nonlinear_feedback(m, 0.0) == 0.0);
}

TEST_CASE("off-manifold preparation drives the yaw rate down") {
  const LateralModel m = build_state_space(table1());
  PreparationConfig cfg;
  cfg.kp = 2000.0;
  cfg.horizon = 5.0;
  const auto prep = off_manifold_preparation(m, Vec2(0.1, 0.05), cfg);
  REQUIRE(prep.has_value());
  CHECK(std::abs(prep->final_state(1)) <= cfg.target_eps);
  CHECK(prep->horizon_needed <= cfg.horizon);
  CHECK(prep->mz.size() ==
        static_cast<std::size_t>(std::llround(prep->horizon_needed / cfg.dt)));

  PreparationConfig tiny = cfg;
  tiny.horizon = 2e-3;
  CHECK(!off_manifold_preparation(m, Vec2(0.1, 0.05), tiny).has_value());
}

TEST_CASE("covert internal model steps like rk4") {
  const LateralModel m = build_state_space(table1());
  CovertState cs;
  cs.xa = Vec2(0.01, -0.02);
  const auto u_c = [](double t) { return 100.0 + 10.0 * t; };
  const CovertState next = covert_internal_step(cs, m, u_c, 0.5, 1e-3);
  const Vec2 want = rk4_step(
      [&](double t, const Vec2& x) { return Vec2(m.A * x + m.B * u_c(t)); }, 0.5, cs.xa, 1e-3);
  CHECK((next.xa - want).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("linear sensor compensation is minus C xa") {
  const LateralModel m = build_state_space(table1());
  CovertState cs;
  cs.xa = Vec2(0.1, -0.2);
  const OutputMap yaw = output_map(m, OutputCase::YawRate);
  CHECK(covert_sensor_comp_linear(cs, yaw)(0) == 0.2);
  const OutputMap both = output_map(m, OutputCase::Combined);
  const Eigen::VectorXd comp = covert_sensor_comp_linear(cs, both);
  REQUIRE(comp.size() == 2);
  CHECK(comp(0) == 0.2);
  CHECK(comp(1) == doctest::Approx(-(both.C(1, 0) * 0.1 + both.C(1, 1) * -0.2)).epsilon(1e-15));
}

TEST_CASE("quadratic sensor compensation reconstructs the nominal output") {
  const Vec2 xn(0.1, -0.2), xa(0.03, 0.05);
  const Vec2 x = xn + xa;
  const double y_true = -x(1) * x(0);
  CovertState cs;
  cs.xa = xa;
  const double y_seen = y_true + covert_sensor_comp_nonlinear(cs, xn);
  CHECK(y_seen == doctest::Approx(-xn(1) * xn(0)).epsilon(1e-14));
}

TEST_CASE("tracking law integrates the channel error") {
  TrackingConfig cfg;
  cfg.ka = Vec2(2.0, 3.0);
  cfg.la = 5.0;
  cfg.reference = SteeringProfile::constant(0.1);
  TrackingState ts;
  const double u1 = covert_tracking_input(ts, cfg, Vec2(1.0, 2.0), 0.3, 7.0, 0.0, 0.1);
  CHECK(ts.za == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(u1 == doctest::Approx(2.0 + 6.0 + 5.0 * 0.02 - 7.0).epsilon(1e-14));
  covert_tracking_input(ts, cfg, Vec2(1.0, 2.0), 0.3, 7.0, 0.1, 0.1);
  CHECK(ts.za == doctest::Approx(0.04).epsilon(1e-14));
}

TEST_CASE("discrete derivative bound") {
  std::vector<Eigen::VectorXd> ys;
  for (double v : {0.0, 3.0, 1.0}) ys.push_back(Eigen::VectorXd::Constant(1, v));
  CHECK(max_discrete_derivative(ys, 0.5) == doctest::Approx(6.0));
  CHECK(max_discrete_derivative({ys[0]}, 0.5) == 0.0);
}

TEST_CASE("replay recording and playback") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::Combined);
  const TimeGrid grid(0.0, 1e-3, 3000);
  const Trace tr = simulate(m, map, SteeringProfile::sinusoid(0.05, 0.2), {}, {}, grid, {});

  const auto buf = replay_record(tr, 2.0, 1.0, 1e6);
  REQUIRE(buf.has_value());
  REQUIRE(buf->samples.size() == 1001);
  CHECK(buf->samples.front() == tr.y_true[1000]);
  CHECK(buf->samples.back() == tr.y_true[2000]);

  CHECK(replay_output(*buf, 2.0) == buf->samples.front());
  CHECK(replay_output(*buf, 3.0) == buf->samples.back());
  CHECK(replay_output(*buf, 2.5) == tr.y_true[1500]);
  CHECK_THROWS_AS(replay_output(*buf, 1.9), OutOfWindowError);
  CHECK_THROWS_AS(replay_output(*buf, 3.1), OutOfWindowError);

  // too strict a steady-state bound refuses the window
  CHECK(!replay_record(tr, 2.0, 1.0, 1e-9).has_value());
  // window endpoints must land on the grid
  CHECK_THROWS_AS(replay_record(tr, 2.00037, 1.0, 1e6), std::invalid_argument);
}

TEST_CASE("zda executor constants and resources") {
  const LateralModel m = build_state_space(table1());

  ZdaLinearExecutor yaw(m, output_map(m, OutputCase::YawRate), {});
  REQUIRE(yaw.plan().has_value());
  CHECK(yaw.constants().s0.has_value());
  CHECK(!yaw.constants().note.has_value());
  CHECK(yaw.initial_state_offset()(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(yaw.resources().needs_model);
  CHECK(yaw.resources().disrupts_actuators);
  CHECK(!yaw.resources().disrupts_sensors);
  CHECK(!yaw.resources().needs_disclosure);

  ZdaLinearExecutor both(m, output_map(m, OutputCase::Combined), {});
  CHECK(!both.plan().has_value());
  CHECK(both.constants().note.has_value());
  CHECK(both.initial_state_offset() == Vec2::Zero());

  ZdaConfig inject_only;
  inject_only.mode = ZdaMode::InjectionOnly;
  ZdaLinearExecutor pure(m, output_map(m, OutputCase::YawRate), inject_only);
  CHECK(pure.initial_state_offset() == Vec2::Zero());
}

TEST_CASE("covert executor rejects the quadratic output") {
  const LateralModel m = build_state_space(table1());
  const OutputMap ax = output_map(m, OutputCase::LongitudinalAccel);
  CHECK_THROWS_AS(CovertLinearExecutor(m, ax, {}), std::invalid_argument);
}

TEST_CASE("replay executor needs a steady-state bound") {
  ReplayOptions opt;
  opt.t_r = 2.0;
  opt.tau = 1.0;
  CHECK_THROWS_AS(ReplayExecutor(opt, TimeGrid(0.0, 1e-3, 3000), {}), std::invalid_argument);
  opt.delta_ss = 10.0;
  CHECK_NOTHROW(ReplayExecutor(opt, TimeGrid(0.0, 1e-3, 3000), {}));
}

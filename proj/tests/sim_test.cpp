#include <doctest.h>

#include <cmath>
#include <numbers>

#include "latlab/sim.hpp"
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

TEST_CASE("steering profiles") {
  CHECK(SteeringProfile::zero()(3.0) == 0.0);
  CHECK(SteeringProfile::constant(0.07)(12.0) == 0.07);

  const SteeringProfile st = SteeringProfile::step(2.0, 0.1);
  CHECK(st(1.999) == 0.0);
  CHECK(st(2.0) == 0.1);
  CHECK(st(5.0) == 0.1);

  const SteeringProfile sine = SteeringProfile::sinusoid(0.05, 0.2, 0.3);
  const double t = 1.7;
  CHECK(sine(t) == doctest::Approx(0.05 * std::sin(2.0 * std::numbers::pi * 0.2 * t + 0.3))
                       .epsilon(1e-15));
}

TEST_CASE("random steps are pure, bounded, and piecewise constant") {
  const SteeringProfile rs = SteeringProfile::random_steps(0.04, 0.5, 42);
  CHECK(rs(1.3) == rs(1.3));
  CHECK(rs(1.0) == rs(1.49));   // same hold interval
  CHECK(rs(1.0) != rs(2.0));    // overwhelmingly likely across intervals
  CHECK(rs(-0.2) == 0.0);
  for (int i = 0; i < 200; ++i) CHECK(std::abs(rs(0.013 * i)) <= 0.04);

  const SteeringProfile other = SteeringProfile::random_steps(0.04, 0.5, 43);
  bool differs = false;
  for (int k = 0; k < 8 && !differs; ++k) differs = rs(0.5 * k) != other(0.5 * k);
  CHECK(differs);
}

TEST_CASE("free response matches the matrix exponential and the twin exactly") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  const TimeGrid grid(0.0, 1e-3, 2000);
  SimOptions opt;
  opt.x0 = Vec2(0.3, -0.1);
  const Trace tr = simulate(m, map, SteeringProfile::zero(), {}, {}, grid, opt);

  REQUIRE(tr.rows() == grid.samples());
  for (std::size_t i = 0; i < tr.rows(); i += 100) {
    CHECK(tr.x_true[i] == tr.x_nominal[i]);
    CHECK(tr.y_true[i](0) == tr.x_true[i](1));
    CHECK(tr.y_received[i] == tr.y_true[i]);
  }
  const Vec2 want = oracle::expm(m.A, 1.0) * opt.x0;
  CHECK((tr.x_true[1000] - want).norm() <= 1e-10);
}

TEST_CASE("sinusoid steering settles onto the frequency-response ellipse") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  const TimeGrid grid(0.0, 1e-3, 10000);
  const double amp = 0.05, f = 0.2, w = 2.0 * std::numbers::pi * f;
  const Trace tr =
      simulate(m, map, SteeringProfile::sinusoid(amp, f), {}, {}, grid, {});

  const auto ss = oracle::sinusoid_steady_state(m.A, m.E, w);
  for (double t : {8.0, 9.0, 10.0}) {
    const auto i = static_cast<std::size_t>(std::llround(t / grid.dt));
    CHECK(std::abs(tr.x_true[i](0) - ss.at(0, amp, w, t)) <= 1e-8);
    CHECK(std::abs(tr.x_true[i](1) - ss.at(1, amp, w, t)) <= 1e-8);
  }
}

TEST_CASE("yaw-rate feedback is strictly causal") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  const TimeGrid grid(0.0, 1e-3, 100);
  SimOptions opt;
  opt.x0 = Vec2(0.0, 0.2);
  opt.controller.enabled = true;
  opt.controller.yaw_rate_gain = 1000.0;
  const Trace tr = simulate(m, map, SteeringProfile::zero(), {}, {}, grid, opt);

  CHECK(tr.u_nominal[0](0) == 0.0);  // nothing measured yet
  CHECK(tr.u_nominal[1](0) == -1000.0 * tr.y_received[0](0));
  CHECK(tr.u_nominal[2](0) == -1000.0 * tr.y_received[1](0));

  const OutputMap lat = output_map(m, OutputCase::LateralAccel);
  CHECK_THROWS_AS(simulate(m, lat, SteeringProfile::zero(), {}, {}, grid, opt),
                  std::invalid_argument);
}

TEST_CASE("sensor tap shifts only the received channel") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  ChannelTaps taps;
  taps.sensor = [](double, Eigen::VectorXd y) {
    y(0) += 1.0;
    return y;
  };
  const Trace tr =
      simulate(m, map, SteeringProfile::sinusoid(0.05, 0.2), taps, {}, TimeGrid(0.0, 1e-3, 500), {});
  for (std::size_t i = 0; i < tr.rows(); i += 50) {
    CHECK(tr.y_received[i](0) == tr.y_true[i](0) + 1.0);
    CHECK(tr.x_true[i] == tr.x_nominal[i]);  // plant untouched
  }
}

TEST_CASE("actuator tap drives the plant but not the twin") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  ChannelTaps taps;
  taps.actuator = [](double, Vec2 u) {
    u(0) += 200.0;
    return u;
  };
  const Trace tr =
      simulate(m, map, SteeringProfile::zero(), taps, {}, TimeGrid(0.0, 1e-3, 3000), {});
  // forced steady state -A^-1 B Mz
  CHECK(tr.x_true.back()(0) == doctest::Approx(-0.04673227).epsilon(1e-5));
  CHECK(tr.x_true.back()(1) == doctest::Approx(0.01230921).epsilon(1e-5));
  for (std::size_t i = 0; i < tr.rows(); i += 300) CHECK(tr.x_nominal[i] == Vec2::Zero());
  CHECK(tr.u_injected[100](0) == 200.0);
  CHECK(tr.u_nominal[100](0) == 0.0);
}

TEST_CASE("yaw moment clamp bites the attacked path") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  ChannelTaps taps;
  taps.actuator = [](double, Vec2 u) {
    u(0) += 200.0;
    return u;
  };
  SaturationLimits lim;
  lim.mz_max = 100.0;
  lim.mz_enabled = true;
  const Trace tr =
      simulate(m, map, SteeringProfile::zero(), taps, lim, TimeGrid(0.0, 1e-3, 3000), {});
  CHECK(tr.u_injected[10](0) == 200.0);  // command as injected, before the clamp
  CHECK(tr.clipped[10] == 1);
  // the plant follows the clamped value
  CHECK(tr.x_true.back()(1) == doctest::Approx(0.5 * 0.01230921).epsilon(1e-5));
}

TEST_CASE("attack offset applies to the plant state only") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  SimOptions opt;
  opt.x0 = Vec2(0.1, 0.0);
  opt.attack_offset = Vec2(0.5, 0.0);
  const Trace tr = simulate(m, map, SteeringProfile::zero(), {}, {}, TimeGrid(0.0, 1e-3, 10), opt);
  CHECK(tr.x_true[0] == Vec2(0.6, 0.0));
  CHECK(tr.x_nominal[0] == Vec2(0.1, 0.0));
}

TEST_CASE("piecewise tire plant reduces to the linear one inside the knee") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  const TimeGrid grid(0.0, 1e-3, 4000);
  const SteeringProfile steer = SteeringProfile::sinusoid(0.05, 0.2);

  SimOptions lin;
  lin.plant = PlantKind::Linear;
  const Trace a = simulate(m, map, steer, {}, {}, grid, lin);

  SimOptions tire;
  tire.plant = PlantKind::NonlinearTire;
  SaturationLimits wide;
  wide.tire_enabled = true;
  wide.tire_alpha_sat = 1e9;  // never reached
  const Trace b = simulate(m, map, steer, {}, wide, grid, tire);

  SaturationLimits tight = wide;
  tight.tire_alpha_sat = 0.02;
  const Trace c = simulate(m, map, steer, {}, tight, grid, tire);

  double max_ab = 0.0, max_ac = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    max_ab = std::max(max_ab, (a.x_true[i] - b.x_true[i]).cwiseAbs().maxCoeff());
    max_ac = std::max(max_ac, (a.x_true[i] - c.x_true[i]).cwiseAbs().maxCoeff());
  }
  CHECK(max_ab <= 1e-12);
  CHECK(max_ac >= 1e-3);  // saturating tires change the response
}

TEST_CASE("observer gain placement") {
  const LateralModel m = build_state_space(table1());

  SUBCASE("single channel, real poles") {
    const OutputMap map = output_map(m, OutputCase::YawRate);
    const Eigen::MatrixXd L = design_observer_gain(m, map, -10.0, -12.0);
    const auto [lo, hi] = oracle::quadratic_eigs(Mat2(m.A - L * map.C));
    CHECK(lo.real() == doctest::Approx(-12.0).epsilon(1e-9));
    CHECK(hi.real() == doctest::Approx(-10.0).epsilon(1e-9));
    CHECK(std::abs(lo.imag()) <= 1e-9);
  }
  SUBCASE("single channel, complex pair") {
    const OutputMap map = output_map(m, OutputCase::LateralAccel);
    const Eigen::MatrixXd L = design_observer_gain(m, map, cplx(-8.0, 2.0), cplx(-8.0, -2.0));
    const auto [lo, hi] = oracle::quadratic_eigs(Mat2(m.A - L * map.C));
    CHECK(lo.real() == doctest::Approx(-8.0).epsilon(1e-9));
    CHECK(std::abs(lo.imag()) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(hi == std::conj(lo));
  }
  SUBCASE("two channels") {
    const OutputMap map = output_map(m, OutputCase::Combined);
    const Eigen::MatrixXd L = design_observer_gain(m, map, -10.0, -12.0);
    REQUIRE(L.cols() == 2);
    const auto [lo, hi] = oracle::quadratic_eigs(Mat2(m.A - L * map.C));
    CHECK(lo.real() == doctest::Approx(-12.0).epsilon(1e-9));
    CHECK(hi.real() == doctest::Approx(-10.0).epsilon(1e-9));
  }
  SUBCASE("bad pole pair") {
    const OutputMap map = output_map(m, OutputCase::YawRate);
    CHECK_THROWS_AS(design_observer_gain(m, map, cplx(-8.0, 2.0), cplx(-7.0, -2.0)),
                    std::invalid_argument);
  }
  SUBCASE("unobservable pair") {
    OutputMap blind;
    blind.which = OutputCase::YawRate;
    blind.C = Eigen::MatrixXd::Zero(1, 2);
    blind.D = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(design_observer_gain(m, blind, -10.0, -12.0), UnobservableError);
  }
}

TEST_CASE("observer converges along a simulated run") {
  const LateralModel m = build_state_space(table1());
  const OutputMap map = output_map(m, OutputCase::YawRate);
  const TimeGrid grid(0.0, 1e-3, 5000);
  const Trace tr = simulate(m, map, SteeringProfile::sinusoid(0.05, 0.2), {}, {}, grid, {});

  ObserverState obs;
  obs.xhat = Vec2(0.4, -0.3);  // wrong on purpose
  obs.L = design_observer_gain(m, map, -10.0, -12.0);
  for (std::size_t i = 0; i + 1 < tr.rows(); ++i)
    obs = observer_step(obs, tr.u_nominal[i], tr.y_received[i], m, map, grid.dt);
  // the held u and y leave an O(dt) sampling floor, well under the 0.5 start
  CHECK((obs.xhat - tr.x_true.back()).cwiseAbs().maxCoeff() <= 1e-3);
}

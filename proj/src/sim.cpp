#include "latlab/sim.hpp"

#include <cmath>
#include <numbers>

namespace latlab {

namespace {

// splitmix64: counter-indexed generator so RandomSteps stays a pure function
// of time (no per-call engine state).
double hashed_unit(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

double SteeringProfile::operator()(double t) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return level;
    case Kind::Step:
      return t >= time ? level : 0.0;
    case Kind::Sinusoid:
      return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
    case Kind::RandomSteps: {
      if (time <= 0.0) return 0.0;
      const double k = std::floor(t / time);
      if (k < 0.0) return 0.0;
      return amplitude * (2.0 * hashed_unit(seed, static_cast<std::uint64_t>(k)) - 1.0);
    }
  }
  return 0.0;
}

SteeringProfile SteeringProfile::zero() { return {}; }

SteeringProfile SteeringProfile::constant(double level) {
  SteeringProfile p;
  p.kind = Kind::Constant;
  p.level = level;
  return p;
}

SteeringProfile SteeringProfile::step(double time, double level) {
  SteeringProfile p;
  p.kind = Kind::Step;
  p.time = time;
  p.level = level;
  return p;
}

SteeringProfile SteeringProfile::sinusoid(double amplitude, double frequency_hz, double phase) {
  SteeringProfile p;
  p.kind = Kind::Sinusoid;
  p.amplitude = amplitude;
  p.frequency = frequency_hz;
  p.phase = phase;
  return p;
}

SteeringProfile SteeringProfile::random_steps(double amplitude, double hold, std::uint64_t seed) {
  SteeringProfile p;
  p.kind = Kind::RandomSteps;
  p.amplitude = amplitude;
  p.time = hold;
  p.seed = seed;
  return p;
}

namespace {

Vec2 linear_deriv(const LateralModel& mdl, const Vec2& x, const Vec2& u) {
  return mdl.A * x + mdl.B * u(0) + mdl.E * u(1);
}

// Same physics with the axle forces routed through the piecewise-linear tire.
// Identical to linear_deriv (up to fp association) while both axles stay
// inside the linear range.
Vec2 tire_deriv(const LateralModel& mdl, const Vec2& x, const Vec2& u,
                const SaturationLimits& lim) {
  const VehicleParams& p = mdl.params;
  const double k = p.stiffness_factor();
  const double alpha_f = u(1) - (x(0) + p.a * x(1)) / p.vx;
  const double alpha_r = -(x(0) - p.b * x(1)) / p.vx;
  const double fyf = tire_effective_force(alpha_f, k * p.Cf, lim);
  const double fyr = tire_effective_force(alpha_r, k * p.Cr, lim);
  return {(fyf + fyr) / p.m - p.vx * x(1), (p.a * fyf - p.b * fyr + u(0)) / p.Iz};
}

int yaw_rate_channel(const OutputMap& map) {
  switch (map.which) {
    case OutputCase::YawRate:
    case OutputCase::Combined:
      return 0;
    default:
      return -1;
  }
}

}  // namespace

Trace simulate(const LateralModel& model, const OutputMap& map, const SteeringProfile& steer,
               const ChannelTaps& taps, const SaturationLimits& lim, const TimeGrid& grid,
               const SimOptions& opt) {
  const int p = map.dim();
  const int yaw_ch = yaw_rate_channel(map);
  if (opt.controller.enabled && yaw_ch < 0)
    throw std::invalid_argument("simulate: yaw-rate feedback needs a yaw rate channel");

  Trace tr;
  tr.grid = grid;
  tr.output_dim = p;
  const std::size_t n = grid.samples();
  tr.t.reserve(n);
  tr.x_true.reserve(n);
  tr.x_nominal.reserve(n);
  tr.u_nominal.reserve(n);
  tr.u_injected.reserve(n);
  tr.y_true.reserve(n);
  tr.y_received.reserve(n);
  tr.y_nominal.reserve(n);
  tr.clipped.reserve(n);

  Vec2 x_true = opt.x0 + opt.attack_offset;
  Vec2 x_nom = opt.x0;
  double mz_fb_att = 0.0;  // previous-row feedback, attacked loop
  double mz_fb_nom = 0.0;  // previous-row feedback, twin

  auto deriv = [&](const Vec2& x, const Vec2& u) {
    return opt.plant == PlantKind::Linear ? linear_deriv(model, x, u)
                                          : tire_deriv(model, x, u, lim);
  };
  auto tap_act = [&](double t, const Vec2& u) { return taps.actuator ? taps.actuator(t, u) : u; };

  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.time_at(i);
    const double delta_cmd = steer(t);
    const Vec2 u_nom_att(mz_fb_att, delta_cmd);
    const Vec2 u_nom_twin(mz_fb_nom, delta_cmd);

    // Steering actually reaching the tires at the row time; taps must keep the
    // steering channel free of measurement feedback, so this early call is
    // safe to repeat below.
    const double delta_app_att = saturate(tap_act(t, u_nom_att), lim).u(1);
    const double delta_app_twin = saturate(u_nom_twin, lim).u(1);

    StepContext ctx;
    ctx.index = i;
    ctx.t = t;
    ctx.dt = grid.dt;
    ctx.x_true = x_true;
    ctx.x_nominal = x_nom;
    ctx.u_nominal = u_nom_att;
    ctx.delta_applied = delta_app_att;
    if (taps.pre_measure) taps.pre_measure(ctx);

    Eigen::VectorXd y_true = measure(map, x_true, delta_app_att);
    Eigen::VectorXd y_recv = taps.sensor ? taps.sensor(t, y_true) : y_true;
    Eigen::VectorXd y_nom = measure(map, x_nom, delta_app_twin);

    ctx.y_true = y_true;
    if (taps.post_measure) taps.post_measure(ctx);

    const Vec2 u_inj = tap_act(t, u_nom_att);
    const SaturatedInput applied = saturate(u_inj, lim);

    tr.t.push_back(t);
    tr.x_true.push_back(x_true);
    tr.x_nominal.push_back(x_nom);
    tr.u_nominal.push_back(u_nom_att);
    tr.u_injected.push_back(u_inj);
    tr.y_true.push_back(std::move(y_true));
    tr.y_received.push_back(y_recv);
    tr.y_nominal.push_back(std::move(y_nom));
    tr.clipped.push_back(applied.clipped ? 1 : 0);

    if (i + 1 == n) break;

    auto att_f = [&](double tau, const Vec2& s) {
      const Vec2 u(mz_fb_att, steer(tau));
      return deriv(s, saturate(tap_act(tau, u), lim).u);
    };
    auto nom_f = [&](double tau, const Vec2& s) {
      const Vec2 u(mz_fb_nom, steer(tau));
      return deriv(s, saturate(u, lim).u);
    };
    x_true = rk4_step(att_f, t, x_true, grid.dt);
    x_nom = rk4_step(nom_f, t, x_nom, grid.dt);
    if (!detail::state_is_finite(x_true) || !detail::state_is_finite(x_nom))
      throw NonFiniteError(i);

    if (taps.end_step) taps.end_step(t, grid.dt);

    if (opt.controller.enabled) {
      mz_fb_att = -opt.controller.yaw_rate_gain * tr.y_received.back()(yaw_ch);
      mz_fb_nom = -opt.controller.yaw_rate_gain * tr.y_nominal.back()(yaw_ch);
    }
  }
  return tr;
}

ObserverState observer_step(const ObserverState& obs, const Vec2& u, const Eigen::VectorXd& y,
                            const LateralModel& model, const OutputMap& map, double dt) {
  if (map.nonlinear())
    throw std::invalid_argument("observer_step: linear output cases only");
  ObserverState next = obs;
  auto f = [&](double, const Vec2& xh) -> Vec2 {
    Vec2 dx = model.A * xh + model.B * u(0) + model.E * u(1);
    if (obs.L.size() > 0) {
      const Eigen::VectorXd innov = y - map.C * xh - map.D * u(1);
      dx += obs.L * innov;
    }
    return dx;
  };
  next.xhat = rk4_step(f, 0.0, obs.xhat, dt);
  if (!detail::state_is_finite(next.xhat)) throw NonFiniteError(0);
  return next;
}

Eigen::MatrixXd design_observer_gain(const LateralModel& model, const OutputMap& map, cplx pole1,
                                     cplx pole2) {
  if (map.nonlinear())
    throw UnobservableError("design_observer_gain: linear output cases only");
  const double q1 = -(pole1 + pole2).real();
  const double q0 = (pole1 * pole2).real();
  if (std::abs((pole1 + pole2).imag()) > 1e-12 || std::abs((pole1 * pole2).imag()) > 1e-12)
    throw std::invalid_argument("design_observer_gain: poles must be real or a conjugate pair");

  const Mat2& A = model.A;
  const Mat2 qA = A * A + q1 * A + q0 * Mat2::Identity();
  const int p = map.dim();

  // Observability matrix [C; CA], stacked per row of C.
  Eigen::MatrixXd obs_mat(2 * p, 2);
  obs_mat.topRows(p) = map.C;
  obs_mat.bottomRows(p) = map.C * A;
  if (rank_with_tol(obs_mat, kDefaultRankTol) < 2)
    throw UnobservableError("design_observer_gain: (A, C) not observable");

  if (p == 1) {
    Mat2 O;
    O.row(0) = map.C.row(0);
    O.row(1) = map.C.row(0) * A;
    return qA * O.inverse() * Vec2(0.0, 1.0);
  }

  // Two independent rows: make A - L C equal a matrix K with the wanted
  // spectrum directly.
  Mat2 C2 = map.C;
  if (rank_with_tol(C2, kDefaultRankTol) == 2) {
    Mat2 K;
    if (pole1.imag() == 0.0 && pole2.imag() == 0.0) {
      K << pole1.real(), 0.0, 0.0, pole2.real();
    } else {
      K << pole1.real(), pole1.imag(), -pole1.imag(), pole1.real();
    }
    return (A - K) * C2.inverse();
  }

  // Degenerate C: fall back to the first row that observes the pair.
  for (int row = 0; row < p; ++row) {
    Mat2 O;
    O.row(0) = map.C.row(row);
    O.row(1) = map.C.row(row) * A;
    if (rank_with_tol(O, kDefaultRankTol) == 2) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, p);
      L.col(row) = qA * O.inverse() * Vec2(0.0, 1.0);
      return L;
    }
  }
  throw UnobservableError("design_observer_gain: no observable row");
}

}  // namespace latlab

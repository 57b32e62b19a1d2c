#include "latlab/attacks.hpp"

#include <cmath>
#include <numbers>

namespace latlab {

CMat rosenbrock(const LateralModel& model, const Eigen::MatrixXd& C, cplx s) {
  const int p = static_cast<int>(C.rows());
  CMat P = CMat::Zero(p + 2, 3);
  P.topLeftCorner(2, 2) = s * Mat2::Identity().cast<cplx>() - model.A.cast<cplx>();
  P.block(0, 2, 2, 1) = -model.B.cast<cplx>();
  P.bottomLeftCorner(p, 2) = C.cast<cplx>();
  return P;
}

namespace {

// Kernel direction of P(s0), phase-rotated so the dominant state component is
// real positive, scaled to |x0| = amplitude. Empty when the direction has no
// state part (nothing to place on the manifold).
std::optional<ZdaPlan> plan_from_zero(const LateralModel& model, const Eigen::MatrixXd& C, cplx s0,
                                      const ZdaConfig& cfg) {
  const CMat P = rosenbrock(model, C, s0);
  if (rank_with_tol(P) >= 3) return std::nullopt;
  const std::optional<CVec> v = null_direction(P);
  if (!v) return std::nullopt;

  Eigen::Vector2cd x0 = v->head<2>();
  cplx a0 = (*v)(2);
  const int lead = std::abs(x0(0)) >= std::abs(x0(1)) ? 0 : 1;
  const double nx = x0.norm();
  if (!(nx > 1e-12)) return std::nullopt;

  const cplx rot = std::conj(x0(lead)) / std::abs(x0(lead));
  const double scale = cfg.amplitude / nx;
  ZdaPlan plan;
  plan.s0 = s0;
  plan.x0 = x0 * (rot * scale);
  plan.a0 = a0 * (rot * scale);
  plan.t0 = cfg.t0;
  return plan;
}

}  // namespace

std::optional<ZdaPlan> zda_synthesize_linear(const LateralModel& model, const OutputMap& map,
                                             const ZdaConfig& cfg) {
  if (map.nonlinear()) return std::nullopt;

  const double a11 = model.A(0, 0);
  const double a12 = model.A(0, 1);
  const double vx = model.params.vx;

  std::vector<cplx> candidates;
  switch (map.which) {
    case OutputCase::YawRate:
      candidates.emplace_back(a11, 0.0);
      break;
    case OutputCase::LateralAccel:
      // det P(s) = b2 ((a12 + vx) s - a11 vx); constant (no zero) when the
      // s-coefficient vanishes.
      if (std::abs(a12 + vx) > 1e-12 * std::abs(a11 * vx))
        candidates.emplace_back(a11 * vx / (a12 + vx), 0.0);
      break;
    default:
      break;  // Combined: P(s) is 4x3 with full column rank for every s
  }
  const auto [l1, l2] = eig2x2(model.A);
  candidates.push_back(l1);
  candidates.push_back(l2);

  for (const cplx& s : candidates)
    if (auto plan = plan_from_zero(model, map.C, s, cfg)) return plan;
  return std::nullopt;
}

double zda_input(const ZdaPlan& plan, double t) {
  return (plan.a0 * std::exp(plan.s0 * (t - plan.t0))).real();
}

NonlinearZdaPlan zda_synthesize_nonlinear(const LateralModel& model, const Vec2& x_est, double t0,
                                          double eps) {
  NonlinearZdaPlan plan;
  plan.a11 = model.A(0, 0);
  plan.t0 = t0;
  if (std::abs(x_est(1)) <= eps) {
    plan.branch = ZdaBranch::Z1;
    plan.m1_bar = -(model.A(1, 0) / model.B(1)) * x_est(0);
  } else if (std::abs(x_est(0)) <= eps) {
    plan.branch = ZdaBranch::Z2;
  } else {
    plan.branch = ZdaBranch::OffManifold;
  }
  return plan;
}

double zda_nonlinear_input(const NonlinearZdaPlan& plan, double t) {
  switch (plan.branch) {
    case ZdaBranch::Z1:
      return plan.m1_bar * std::exp(plan.a11 * (t - plan.t0));
    case ZdaBranch::Z2:
      throw BranchUnsupportedError("zda_nonlinear_input: only the equilibrium lies on v_y = 0");
    default:
      throw BranchUnsupportedError("zda_nonlinear_input: state is off the zero manifold");
  }
}

double zda_nonlinear_feedback(const LateralModel& model, double v_y) {
  return -(model.A(1, 0) / model.B(1)) * v_y;
}

std::optional<PreparationResult> off_manifold_preparation(const LateralModel& model,
                                                          const Vec2& x_est,
                                                          const PreparationConfig& cfg) {
  PreparationResult res;
  Vec2 x = x_est;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt));
  for (std::size_t i = 0; i <= steps; ++i) {
    if (std::abs(x(1)) <= cfg.target_eps) {
      res.horizon_needed = static_cast<double>(i) * cfg.dt;
      res.final_state = x;
      return res;
    }
    if (i == steps) break;
    const double mz = -cfg.kp * x(1);
    res.mz.push_back(mz);
    auto f = [&](double, const Vec2& s) -> Vec2 { return model.A * s + model.B * mz; };
    x = rk4_step(f, static_cast<double>(i) * cfg.dt, x, cfg.dt);
    if (!detail::state_is_finite(x)) return std::nullopt;
  }
  return std::nullopt;
}

CovertState covert_internal_step(const CovertState& cs, const LateralModel& attacker_model,
                                 const std::function<double(double)>& u_c, double t, double dt) {
  auto f = [&](double tau, const Vec2& xa) -> Vec2 {
    return attacker_model.A * xa + attacker_model.B * u_c(tau);
  };
  CovertState next;
  next.xa = rk4_step(f, t, cs.xa, dt);
  if (!detail::state_is_finite(next.xa)) throw NonFiniteError(0);
  return next;
}

Eigen::VectorXd covert_sensor_comp_linear(const CovertState& cs, const OutputMap& attacker_map) {
  return -(attacker_map.C * cs.xa);
}

double covert_sensor_comp_nonlinear(const CovertState& cs, const Vec2& xhat_nominal) {
  const double v_ya = cs.xa(0);
  const double ra = cs.xa(1);
  return v_ya * xhat_nominal(1) + xhat_nominal(0) * ra + v_ya * ra;
}

double covert_tracking_input(TrackingState& ts, const TrackingConfig& cfg, const Vec2& xhat,
                             double y_channel, double u_nominal_mz, double t, double dt) {
  ts.za += (y_channel - cfg.reference(t)) * dt;
  return cfg.ka.dot(xhat) + cfg.la * ts.za - u_nominal_mz;
}

double max_discrete_derivative(const std::vector<Eigen::VectorXd>& samples, double dt) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    worst = std::max(worst, ((samples[i + 1] - samples[i]) / dt).cwiseAbs().maxCoeff());
  return worst;
}

namespace {

std::size_t grid_index(const TimeGrid& grid, double t, const char* what) {
  const double raw = (t - grid.t0) / grid.dt;
  const long long k = std::llround(raw);
  if (k < 0 || static_cast<std::size_t>(k) > grid.n_steps ||
      std::abs(raw - static_cast<double>(k)) > 0.25)
    throw std::invalid_argument(std::string(what) + " is off the simulation grid");
  return static_cast<std::size_t>(k);
}

}  // namespace

std::optional<ReplayBuffer> replay_record(const Trace& trace, double t_r, double tau,
                                          double delta_ss) {
  const std::size_t i0 = grid_index(trace.grid, t_r - tau, "recording window start");
  const std::size_t i1 = grid_index(trace.grid, t_r, "recording window end");
  if (i1 >= trace.rows() || i0 > i1)
    throw std::invalid_argument("recording window is outside the trace");

  ReplayBuffer buf;
  buf.t_r = t_r;
  buf.tau = tau;
  buf.dt = trace.grid.dt;
  buf.samples.assign(trace.y_true.begin() + static_cast<long>(i0),
                     trace.y_true.begin() + static_cast<long>(i1) + 1);
  if (max_discrete_derivative(buf.samples, buf.dt) >= delta_ss) return std::nullopt;
  return buf;
}

Eigen::VectorXd replay_output(const ReplayBuffer& buf, double t) {
  const double raw = (t - buf.t_r) / buf.dt;
  const long long k = std::llround(raw);
  if (k < 0 || static_cast<std::size_t>(k) >= buf.samples.size())
    throw OutOfWindowError("replay_output: t outside [t_r, t_r + tau]");
  return buf.samples[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------

namespace {

bool row_started(double t, double t0, double dt) { return t >= t0 - 0.25 * dt; }

}  // namespace

ZdaLinearExecutor::ZdaLinearExecutor(const LateralModel& model, const OutputMap& map,
                                     const ZdaConfig& cfg)
    : cfg_(cfg), plan_(zda_synthesize_linear(model, map, cfg)) {}

ChannelTaps ZdaLinearExecutor::taps() {
  ChannelTaps tp;
  tp.pre_measure = [this](const StepContext& ctx) {
    active_row_ = plan_ && row_started(ctx.t, plan_->t0, ctx.dt);
  };
  tp.actuator = [this](double t, Vec2 u) -> Vec2 {
    if (active_row_) u(0) += zda_input(*plan_, t);
    return u;
  };
  return tp;
}

AttackResources ZdaLinearExecutor::resources() const {
  AttackResources r;
  r.needs_model = true;
  r.disrupts_actuators = true;
  return r;
}

Vec2 ZdaLinearExecutor::initial_state_offset() const {
  if (plan_ && cfg_.mode == ZdaMode::OnManifold) return plan_->x0.real();
  return Vec2::Zero();
}

SynthesisConstants ZdaLinearExecutor::constants() const {
  SynthesisConstants c;
  if (plan_) {
    c.s0 = plan_->s0;
    c.x0 = plan_->x0;
    c.a0 = plan_->a0;
  } else {
    c.note = "no invariant zeros for this output case";
  }
  return c;
}

ZdaNonlinearExecutor::ZdaNonlinearExecutor(const LateralModel& model,
                                           const ZdaNonlinearOptions& opt)
    : model_(model), opt_(opt) {}

ChannelTaps ZdaNonlinearExecutor::taps() {
  ChannelTaps tp;
  tp.pre_measure = [this](const StepContext& ctx) {
    if (plan_ || !row_started(ctx.t, opt_.t0, ctx.dt)) return;
    if (!opt_.prepare || std::abs(ctx.x_true(1)) <= opt_.eps) {
      plan_ = zda_synthesize_nonlinear(model_, ctx.x_true, ctx.t, opt_.eps);
      preparing_ = false;
    } else {
      preparing_ = true;
      prep_mz_ = -opt_.prep_kp * ctx.x_true(1);
    }
  };
  tp.actuator = [this](double t, Vec2 u) -> Vec2 {
    if (preparing_) {
      u(0) += prep_mz_;
    } else if (plan_ && plan_->branch == ZdaBranch::Z1) {
      u(0) += zda_nonlinear_input(*plan_, t);
    }
    return u;
  };
  return tp;
}

AttackResources ZdaNonlinearExecutor::resources() const {
  AttackResources r;
  r.needs_model = true;
  r.needs_disclosure = true;  // reads the state at attack start (and r while preparing)
  r.disrupts_actuators = true;
  return r;
}

SynthesisConstants ZdaNonlinearExecutor::constants() const {
  SynthesisConstants c;
  if (!plan_) {
    c.note = "not synthesized yet";
    return c;
  }
  c.branch = plan_->branch;
  switch (plan_->branch) {
    case ZdaBranch::Z1:
      c.m1_bar = plan_->m1_bar;
      break;
    case ZdaBranch::Z2:
      c.note = "equilibrium only: no zero-output motion from v_y = 0";
      break;
    case ZdaBranch::OffManifold:
      c.note = "state off the zero manifold; nothing injected";
      break;
  }
  return c;
}

CovertLinearExecutor::CovertLinearExecutor(const LateralModel& attacker_model,
                                           const OutputMap& attacker_map, const CovertOptions& opt)
    : model_(attacker_model), map_(attacker_map), opt_(opt) {
  if (map_.nonlinear())
    throw std::invalid_argument("CovertLinearExecutor: output map must be linear");
}

double CovertLinearExecutor::u_c_at(double t) const {
  return opt_.tracking ? u_c_held_ : opt_.u_c(t);
}

ChannelTaps CovertLinearExecutor::taps() {
  ChannelTaps tp;
  tp.pre_measure = [this](const StepContext& ctx) {
    active_row_ = row_started(ctx.t, opt_.t0, ctx.dt);
  };
  tp.actuator = [this](double t, Vec2 u) -> Vec2 {
    if (active_row_) u(0) += u_c_at(t);
    return u;
  };
  tp.sensor = [this](double, Eigen::VectorXd y) -> Eigen::VectorXd {
    if (active_row_) y += covert_sensor_comp_linear(state_, map_);
    return y;
  };
  tp.post_measure = [this](const StepContext& ctx) {
    if (!opt_.tracking || !active_row_) return;
    u_c_held_ =
        covert_tracking_input(tracking_, *opt_.tracking, state_.xa,
                              ctx.y_true(opt_.tracking->channel), ctx.u_nominal(0), ctx.t, ctx.dt);
  };
  tp.end_step = [this](double t, double dt) {
    if (!active_row_) return;
    state_ = covert_internal_step(state_, model_, [this](double tau) { return u_c_at(tau); }, t,
                                  dt);
  };
  return tp;
}

AttackResources CovertLinearExecutor::resources() const {
  AttackResources r;
  r.needs_model = true;
  r.needs_disclosure = opt_.tracking.has_value();  // tracking reads (u, y)
  r.disrupts_actuators = true;
  r.disrupts_sensors = true;
  return r;
}

CovertNonlinearExecutor::CovertNonlinearExecutor(const LateralModel& attacker_model,
                                                 const CovertOptions& opt,
                                                 const NominalEstimateConfig& est)
    : model_(attacker_model),
      aux_map_(output_map(attacker_model, OutputCase::Combined)),
      opt_(opt),
      est_(est) {
  if (est_.source == NominalEstimateConfig::Source::Observer)
    observer_.L = design_observer_gain(model_, aux_map_, est_.pole1, est_.pole2);
}

double CovertNonlinearExecutor::u_c_at(double t) const {
  return opt_.tracking ? u_c_held_ : opt_.u_c(t);
}

ChannelTaps CovertNonlinearExecutor::taps() {
  ChannelTaps tp;
  tp.pre_measure = [this](const StepContext& ctx) {
    if (!observer_initialized_) {
      observer_.xhat = (1.0 + est_.init_error_frac) * ctx.x_nominal;
      observer_initialized_ = true;
    }
    xhat_nominal_ =
        est_.source == NominalEstimateConfig::Source::Exact ? ctx.x_nominal : observer_.xhat;
    est_error_ = (xhat_nominal_ - ctx.x_nominal).cwiseAbs().maxCoeff();
    active_row_ = row_started(ctx.t, opt_.t0, ctx.dt);
    u_for_observer_ = Vec2(ctx.u_nominal(0), ctx.delta_applied);
    y_aux_ = measure(aux_map_, ctx.x_true, ctx.delta_applied);
  };
  tp.actuator = [this](double t, Vec2 u) -> Vec2 {
    if (active_row_) u(0) += u_c_at(t);
    return u;
  };
  tp.sensor = [this](double, Eigen::VectorXd y) -> Eigen::VectorXd {
    if (active_row_) y(0) += covert_sensor_comp_nonlinear(state_, xhat_nominal_);
    return y;
  };
  tp.post_measure = [this](const StepContext& ctx) {
    if (!opt_.tracking || !active_row_) return;
    u_c_held_ =
        covert_tracking_input(tracking_, *opt_.tracking, state_.xa,
                              ctx.y_true(opt_.tracking->channel), ctx.u_nominal(0), ctx.t, ctx.dt);
  };
  tp.end_step = [this](double t, double dt) {
    if (est_.source == NominalEstimateConfig::Source::Observer) {
      // Closed loop on the auxiliary pair while the plant still matches the
      // nominal one; open loop on nominal inputs once injection starts.
      ObserverState tmp = observer_;
      if (active_row_) tmp.L = Eigen::MatrixXd();
      tmp = observer_step(tmp, u_for_observer_, y_aux_, model_, aux_map_, dt);
      observer_.xhat = tmp.xhat;
    }
    if (!active_row_) return;
    state_ = covert_internal_step(state_, model_, [this](double tau) { return u_c_at(tau); }, t,
                                  dt);
  };
  return tp;
}

AttackResources CovertNonlinearExecutor::resources() const {
  AttackResources r;
  r.needs_model = true;
  r.needs_disclosure = true;  // nominal-state estimation reads inputs and outputs
  r.disrupts_actuators = true;
  r.disrupts_sensors = true;
  return r;
}

ReplayExecutor::ReplayExecutor(const ReplayOptions& opt, const TimeGrid& grid,
                               std::optional<double> steering_frequency_hz)
    : opt_(opt), steer_freq_(steering_frequency_hz) {
  if (!(opt_.tau > 0.0)) throw std::invalid_argument("ReplayExecutor: tau must be > 0");
  if (!opt_.delta_ss && !steer_freq_)
    throw std::invalid_argument(
        "ReplayExecutor: need an explicit steady-state bound or a periodic steering frequency");
  record_first_ = grid_index(grid, opt_.t_r - opt_.tau, "recording window start");
  record_last_ = grid_index(grid, opt_.t_r, "recording window end");
  buffer_.t_r = opt_.t_r;
  buffer_.tau = opt_.tau;
  buffer_.dt = grid.dt;
  buffer_.samples.reserve(record_last_ - record_first_ + 1);
}

ChannelTaps ReplayExecutor::taps() {
  ChannelTaps tp;
  tp.pre_measure = [this](const StepContext& ctx) {
    if (checked_ || ctx.index != record_last_) return;
    checked_ = true;
    // Gate on the samples recorded so far (everything up to t_r - dt).
    double bound;
    if (opt_.delta_ss) {
      bound = *opt_.delta_ss;
    } else {
      double peak = 0.0;
      for (const auto& y : buffer_.samples) peak = std::max(peak, y.cwiseAbs().maxCoeff());
      bound = 1.5 * 2.0 * std::numbers::pi * *steer_freq_ * peak;
    }
    if (max_discrete_derivative(buffer_.samples, buffer_.dt) < bound) {
      active_ = true;
    } else {
      note_ = "steady-state gate failed; replay skipped";
    }
  };
  tp.post_measure = [this](const StepContext& ctx) {
    if (ctx.index >= record_first_ && ctx.index <= record_last_)
      buffer_.samples.push_back(ctx.y_true);
  };
  tp.sensor = [this](double t, Eigen::VectorXd y) -> Eigen::VectorXd {
    if (active_ && t >= buffer_.t_r - 0.25 * buffer_.dt &&
        t <= buffer_.t_r + buffer_.tau + 0.25 * buffer_.dt)
      return replay_output(buffer_, t);
    return y;
  };
  tp.actuator = [this](double t, Vec2 u) -> Vec2 {
    if (opt_.inject_level != 0.0 && t > opt_.inject_from) u(1) += opt_.inject_level;
    return u;
  };
  return tp;
}

AttackResources ReplayExecutor::resources() const {
  AttackResources r;
  r.disrupts_sensors = true;
  r.disrupts_actuators = opt_.inject_level != 0.0;
  return r;
}

SynthesisConstants ReplayExecutor::constants() const {
  SynthesisConstants c;
  if (!note_.empty()) c.note = note_;
  return c;
}

}  // namespace latlab

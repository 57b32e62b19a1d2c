#include "latlab/vehicle.hpp"

#include <algorithm>

namespace latlab {

void VehicleParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("VehicleParams: ") + name + " must be > 0");
  };
  positive(m, "m");
  positive(Iz, "Iz");
  positive(a, "a");
  positive(b, "b");
  positive(Cf, "Cf");
  positive(Cr, "Cr");
  positive(vx, "vx");
}

LateralModel build_state_space(const VehicleParams& p) {
  p.validate();
  const double k = p.stiffness_factor();
  LateralModel mdl;
  mdl.params = p;
  mdl.A(0, 0) = -k * (p.Cf + p.Cr) / (p.vx * p.m);
  mdl.A(0, 1) = k * (p.b * p.Cr - p.a * p.Cf) / (p.vx * p.m) - p.vx;
  mdl.A(1, 0) = k * (p.b * p.Cr - p.a * p.Cf) / (p.Iz * p.vx);
  mdl.A(1, 1) = -k * (p.a * p.a * p.Cf + p.b * p.b * p.Cr) / (p.Iz * p.vx);
  mdl.B << 0.0, 1.0 / p.Iz;
  mdl.E << k * p.Cf / p.m, k * p.a * p.Cf / p.Iz;
  return mdl;
}

OutputMap output_map(const LateralModel& model, OutputCase which) {
  OutputMap map;
  map.which = which;
  const double a11 = model.A(0, 0);
  const double a12 = model.A(0, 1);
  const double vx = model.params.vx;
  const double e1 = model.E(0);
  switch (which) {
    case OutputCase::YawRate:
      map.C.resize(1, 2);
      map.C << 0.0, 1.0;
      map.D = Eigen::VectorXd::Zero(1);
      break;
    case OutputCase::LateralAccel:
      // a_y = vdot_y + vx r, written on the state: [a11, a12 + vx] x + e1 delta.
      map.C.resize(1, 2);
      map.C << a11, a12 + vx;
      map.D.resize(1);
      map.D << e1;
      break;
    case OutputCase::Combined:
      map.C.resize(2, 2);
      map.C << 0.0, 1.0, a11, a12 + vx;
      map.D.resize(2);
      map.D << 0.0, e1;
      break;
    case OutputCase::LongitudinalAccel:
      map.C.resize(0, 2);
      map.D.resize(0);
      break;
  }
  return map;
}

Eigen::VectorXd measure(const OutputMap& map, const Vec2& x, double delta) {
  if (map.nonlinear()) {
    Eigen::VectorXd y(1);
    y(0) = -x(1) * x(0);
    return y;
  }
  return map.C * x + map.D * delta;
}

HurwitzReport hurwitz_check(const Mat2& A) {
  HurwitzReport rep;
  rep.trace = A(0, 0) + A(1, 1);
  rep.det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  rep.is_hurwitz = rep.trace < 0.0 && rep.det > 0.0;
  return rep;
}

ZeroDynamicsClass zero_dynamics_stability(const VehicleParams& p) {
  p.validate();
  const double front = p.a * p.Cf;
  const double rear = p.b * p.Cr;
  const double margin = front - rear;
  const double scale = std::max(std::abs(front), std::abs(rear));
  if (std::abs(margin) <= 1e-9 * scale) return ZeroDynamicsClass::Boundary;
  return margin < 0.0 ? ZeroDynamicsClass::MinimumPhase : ZeroDynamicsClass::NonMinimumPhase;
}

SaturatedInput saturate(const Vec2& u, const SaturationLimits& lim) {
  SaturatedInput out{u, false};
  if (lim.mz_enabled) {
    const double clamped = std::clamp(u(0), -lim.mz_max, lim.mz_max);
    out.clipped |= clamped != u(0);
    out.u(0) = clamped;
  }
  if (lim.delta_enabled) {
    const double clamped = std::clamp(u(1), -lim.delta_max, lim.delta_max);
    out.clipped |= clamped != u(1);
    out.u(1) = clamped;
  }
  return out;
}

double tire_effective_force(double alpha, double stiffness, const SaturationLimits& lim) {
  if (!lim.tire_enabled || std::abs(alpha) <= lim.tire_alpha_sat) return stiffness * alpha;
  return stiffness * lim.tire_alpha_sat * (alpha > 0.0 ? 1.0 : -1.0);
}

}  // namespace latlab

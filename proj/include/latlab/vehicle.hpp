#pragma once
// Single-track (bicycle) lateral dynamics at constant forward speed.
// State x = [v_y, r] (lateral velocity, yaw rate); inputs are a direct yaw
// moment Mz and the front steering angle delta:
//
//   dx/dt = A x + B Mz + E delta
//
// with four measurement choices stacked on top.

#include "latlab/numerics.hpp"

namespace latlab {

/// How cornering stiffness values are read: PerAxlePair puts a factor 2 on
/// every stiffness term (table values are per wheel), PerAxle uses them as-is.
enum class StiffnessConvention { PerAxlePair, PerAxle };

struct VehicleParams {
  double m = 1412.0;    // kg
  double Iz = 1536.7;   // kg m^2
  double a = 1.015;     // m, CG to front axle
  double b = 1.895;     // m, CG to rear axle
  double Cf = 58400.0;  // N/rad
  double Cr = 40400.0;  // N/rad
  double vx = 16.67;    // m/s, constant longitudinal speed
  StiffnessConvention convention = StiffnessConvention::PerAxlePair;

  double stiffness_factor() const {
    return convention == StiffnessConvention::PerAxlePair ? 2.0 : 1.0;
  }
  /// Throws std::invalid_argument unless every physical parameter is > 0.
  void validate() const;
};

struct LateralModel {
  Mat2 A;
  Vec2 B;  // yaw moment column
  Vec2 E;  // steering column
  VehicleParams params;
};

LateralModel build_state_space(const VehicleParams& p);

enum class OutputCase { YawRate, LateralAccel, Combined, LongitudinalAccel };

/// y = C x + D delta for the three linear cases. LongitudinalAccel is the
/// quadratic accelerometer term y = -r * v_y; it ignores delta and has no
/// C/D representation (C is left empty).
struct OutputMap {
  OutputCase which = OutputCase::YawRate;
  Eigen::MatrixXd C;  // p x 2
  Eigen::VectorXd D;  // p
  bool nonlinear() const { return which == OutputCase::LongitudinalAccel; }
  int dim() const { return nonlinear() ? 1 : static_cast<int>(C.rows()); }
};

OutputMap output_map(const LateralModel& model, OutputCase which);

Eigen::VectorXd measure(const OutputMap& map, const Vec2& x, double delta);

struct HurwitzReport {
  bool is_hurwitz = false;
  double trace = 0.0;
  double det = 0.0;
};

/// 2x2 stability test: Hurwitz iff tr < 0 and det > 0.
HurwitzReport hurwitz_check(const Mat2& A);

enum class ZeroDynamicsClass { MinimumPhase, NonMinimumPhase, Boundary };

/// Sign of a*Cf - b*Cr decides whether the lateral-accel zero dynamics are
/// stable (negative: MinimumPhase). Within 1e-9 of the term scale: Boundary.
ZeroDynamicsClass zero_dynamics_stability(const VehicleParams& p);

struct SaturationLimits {
  double mz_max = 5000.0;        // N m
  double delta_max = 0.6;        // rad
  double tire_alpha_sat = 0.08;  // rad
  bool mz_enabled = false;
  bool delta_enabled = false;
  bool tire_enabled = false;
};

struct SaturatedInput {
  Vec2 u;  // (Mz, delta)
  bool clipped = false;
};

/// Symmetric clamp of the enabled channels; clipped reports whether any
/// component changed.
SaturatedInput saturate(const Vec2& u, const SaturationLimits& lim);

/// Piecewise-linear tire: F = stiffness * alpha inside |alpha| <=
/// tire_alpha_sat, constant at the knee value beyond. Identity to the linear
/// law when tire saturation is disabled. Continuous and odd.
double tire_effective_force(double alpha, double stiffness, const SaturationLimits& lim);

}  // namespace latlab

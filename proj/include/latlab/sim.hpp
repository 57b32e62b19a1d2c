#pragma once
// Closed-loop simulation of the lateral model with attack taps on the
// actuator and sensor channels. Every run advances an attack-free twin from
// the same initial state in lockstep; stealth and impact metrics are defined
// against that twin.

#include <cstdint>
#include <functional>
#include <vector>

#include "latlab/vehicle.hpp"

namespace latlab {

/// Scalar signal in time. Used for the steering command and for attack
/// injection signals. RandomSteps holds a hash-seeded uniform value in
/// [-amplitude, amplitude] constant over each interval of length `time`;
/// being a pure function of t it is safe to sample at substep times.
struct SteeringProfile {
  enum class Kind { Zero, Constant, Step, Sinusoid, RandomSteps };
  Kind kind = Kind::Zero;
  double level = 0.0;      // Constant / Step
  double time = 0.0;       // Step: level for t >= time; RandomSteps: hold length
  double amplitude = 0.0;  // Sinusoid / RandomSteps
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
  std::uint64_t seed = 0;  // RandomSteps

  double operator()(double t) const;

  static SteeringProfile zero();
  static SteeringProfile constant(double level);
  static SteeringProfile step(double time, double level);
  static SteeringProfile sinusoid(double amplitude, double frequency_hz, double phase = 0.0);
  static SteeringProfile random_steps(double amplitude, double hold, std::uint64_t seed);
};

/// One record per grid time. u vectors are (Mz, delta). y_* have one entry
/// per output channel. clipped refers to the attacked actuator path at the
/// row time.
struct Trace {
  TimeGrid grid;
  int output_dim = 1;
  std::vector<double> t;
  std::vector<Vec2> x_true;
  std::vector<Vec2> x_nominal;
  std::vector<Vec2> u_nominal;
  std::vector<Vec2> u_injected;
  std::vector<Eigen::VectorXd> y_true;
  std::vector<Eigen::VectorXd> y_received;
  std::vector<Eigen::VectorXd> y_nominal;
  std::vector<std::uint8_t> clipped;

  std::size_t rows() const { return t.size(); }
};

/// Everything an attack may look at when its per-step hooks run.
struct StepContext {
  std::size_t index = 0;
  double t = 0.0;
  double dt = 0.0;
  Vec2 x_true = Vec2::Zero();
  Vec2 x_nominal = Vec2::Zero();
  Vec2 u_nominal = Vec2::Zero();
  double delta_applied = 0.0;            // post-tap, post-clamp steering at the row time
  Eigen::VectorXd y_true;                // empty in pre_measure
};

/// Attack access points. The two taps must be pure functions of (t, value)
/// for the attack state frozen at the enclosing step; all state updates
/// belong in the hooks. simulate() calls actuator() at RK4 substep times and
/// sensor() once per row. Empty functions mean identity / no-op.
struct ChannelTaps {
  std::function<Vec2(double, const Vec2&)> actuator;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> sensor;
  std::function<void(const StepContext&)> pre_measure;   // before outputs form
  std::function<void(const StepContext&)> post_measure;  // y_true available, before integration
  std::function<void(double t, double dt)> end_step;     // plant has advanced to t + dt
};

enum class PlantKind { Linear, NonlinearTire };

/// Optional proportional yaw-rate feedback Mz = -gain * r_received. Strictly
/// causal: each row applies the previous row's measurement. Requires an
/// output case that contains the yaw rate channel.
struct ControllerConfig {
  bool enabled = false;
  double yaw_rate_gain = 0.0;
};

struct SimOptions {
  Vec2 x0 = Vec2::Zero();
  Vec2 attack_offset = Vec2::Zero();  // added to the attacked plant's x0 only
  PlantKind plant = PlantKind::Linear;
  ControllerConfig controller;
};

/// Run the attacked loop and its attack-free twin over the grid. Per step:
/// nominal command -> actuator tap -> clamp -> RK4 (substep-sampled inputs),
/// with measurements (sensor tap applied) recorded at every grid time.
/// Throws NonFiniteError if either plant leaves the finite range.
Trace simulate(const LateralModel& model, const OutputMap& map, const SteeringProfile& steer,
               const ChannelTaps& taps, const SaturationLimits& lim, const TimeGrid& grid,
               const SimOptions& opt = {});

struct UnobservableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ObserverState {
  Vec2 xhat = Vec2::Zero();
  Eigen::MatrixXd L;  // 2 x p
};

/// Continuous-time Luenberger observer
///   xhat' = A xhat + B Mz + E delta + L (y - C xhat - D delta)
/// advanced one RK4 step with u = (Mz, delta) and y held constant.
ObserverState observer_step(const ObserverState& obs, const Vec2& u, const Eigen::VectorXd& y,
                            const LateralModel& model, const OutputMap& map, double dt);

/// Gain L placing the eigenvalues of A - L C at (pole1, pole2); complex poles
/// must be a conjugate pair. Throws UnobservableError when the observability
/// matrix of (A, C) is rank deficient.
Eigen::MatrixXd design_observer_gain(const LateralModel& model, const OutputMap& map, cplx pole1,
                                     cplx pole2);

}  // namespace latlab

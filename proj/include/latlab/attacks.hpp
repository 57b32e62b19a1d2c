#pragma once
// Attack synthesis and execution: zero-dynamics injections (linear and
// nonlinear output), covert model-matched loops, and sensor replay. Each
// executor owns the runtime state of one attack and exposes the channel taps
// that simulate() consumes.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latlab/sim.hpp"

namespace latlab {

/// What an attack needs and which channels it touches. Constructed per class;
/// replay is the only model-free class, zero-dynamics attacks leave sensors
/// alone, covert attacks disrupt both channels.
struct AttackResources {
  bool needs_model = false;
  bool needs_disclosure = false;
  bool disrupts_actuators = false;
  bool disrupts_sensors = false;
};

/// Rosenbrock system matrix for the yaw-moment input channel:
///   [ sI - A   -B ]
///   [   C       0 ]
/// (p + 2) x 3. Invariant zeros are the s that drop its column rank.
CMat rosenbrock(const LateralModel& model, const Eigen::MatrixXd& C, cplx s);

struct ZdaPlan {
  cplx s0;
  Eigen::Vector2cd x0;  // state part of the zero direction, scaled
  cplx a0;              // input part, same scaling
  double t0 = 0.0;
};

enum class ZdaMode { OnManifold, InjectionOnly };

struct ZdaConfig {
  double t0 = 0.0;
  double amplitude = 0.5;  // 2-norm of the initial state offset
  ZdaMode mode = ZdaMode::OnManifold;
};

/// Invariant-zero search on the Rosenbrock matrix. Candidates are the closed
/// form zeros of the output case followed by the eigenvalues of A; the first
/// candidate that is column-rank deficient wins. The zero direction is
/// phase-rotated real, sign-normalized, and scaled so |x0| = amplitude.
/// Empty when no candidate drops rank (always for Combined).
std::optional<ZdaPlan> zda_synthesize_linear(const LateralModel& model, const OutputMap& map,
                                             const ZdaConfig& cfg);

/// Injected yaw moment Re(a0 e^{s0 (t - t0)}).
double zda_input(const ZdaPlan& plan, double t);

enum class ZdaBranch { Z1, Z2, OffManifold };

/// Output-nulling plan for the longitudinal-accel output. On Z1 (r = 0) the
/// injection is m1_bar * e^{a11 (t - t0)}; Z2 (v_y = 0) only supports the
/// origin equilibrium and admits no motion along it.
struct NonlinearZdaPlan {
  ZdaBranch branch = ZdaBranch::OffManifold;
  double m1_bar = 0.0;
  double a11 = 0.0;
  double t0 = 0.0;
};

struct BranchUnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Classify the estimated state against the zero manifold at tolerance eps
/// and fill in the feedforward constant for Z1.
NonlinearZdaPlan zda_synthesize_nonlinear(const LateralModel& model, const Vec2& x_est, double t0,
                                          double eps = 1e-6);

/// Feedforward injection; throws BranchUnsupportedError off Z1.
double zda_nonlinear_input(const NonlinearZdaPlan& plan, double t);

/// Equivalent feedback form Mz* = -(a21 / b2) v_y.
double zda_nonlinear_feedback(const LateralModel& model, double v_y);

struct PreparationConfig {
  double kp = 2000.0;       // Mz = -kp * r
  double horizon = 5.0;     // s
  double dt = 1e-3;
  double target_eps = 1e-6;
};

struct PreparationResult {
  std::vector<double> mz;     // applied sequence, one value per step taken
  double horizon_needed = 0;  // s
  Vec2 final_state = Vec2::Zero();
};

/// Drive |r| below target_eps with proportional yaw-rate feedback through the
/// Mz channel (steering untouched). Empty when the horizon runs out first.
std::optional<PreparationResult> off_manifold_preparation(const LateralModel& model,
                                                          const Vec2& x_est,
                                                          const PreparationConfig& cfg);

/// Attacker's internal model state for covert attacks.
struct CovertState {
  Vec2 xa = Vec2::Zero();
};

/// One RK4 step of xa' = A xa + B u_c. The attacker models only its own
/// injection; the steering channel does not enter. u_c is sampled at the
/// substep times.
CovertState covert_internal_step(const CovertState& cs, const LateralModel& attacker_model,
                                 const std::function<double(double)>& u_c, double t, double dt);

/// Sensor-side cancellation for the linear cases: y_c = -C xa.
Eigen::VectorXd covert_sensor_comp_linear(const CovertState& cs, const OutputMap& attacker_map);

/// Sensor-side cancellation for y = -r v_y. With x = x^n + x^a,
///   -(v_y^n + v_y^a)(r^n + r^a) + [v_y^a r^n + v_y^n r^a + v_y^a r^a] = -v_y^n r^n,
/// so adding the bracket (nominal states replaced by their estimates) to the
/// measured output reconstructs the nominal one.
double covert_sensor_comp_nonlinear(const CovertState& cs, const Vec2& xhat_nominal);

struct TrackingConfig {
  Vec2 ka = Vec2::Zero();
  double la = 0.0;
  int channel = 0;  // output channel the reference acts on
  SteeringProfile reference;
};

struct TrackingState {
  double za = 0.0;
};

/// Integral-augmented tracking law: za += (y - r_a) dt (rectangle rule), then
/// u_c = ka . xhat + la za - u_nominal_mz.
double covert_tracking_input(TrackingState& ts, const TrackingConfig& cfg, const Vec2& xhat,
                             double y_channel, double u_nominal_mz, double t, double dt);

struct ReplayBuffer {
  std::vector<Eigen::VectorXd> samples;  // recorded at t_r - tau .. t_r inclusive
  double t_r = 0.0;
  double tau = 0.0;
  double dt = 1e-3;
};

struct OutOfWindowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Largest per-step output slope max_i |(y_{i+1} - y_i) / dt|_inf.
double max_discrete_derivative(const std::vector<Eigen::VectorXd>& samples, double dt);

/// Copy the window [t_r - tau, t_r] out of a recorded trace (received
/// channel as seen at the sensor, i.e. y_true). Empty when the steady-state
/// test max |dy/dt| < delta_ss fails on the window.
std::optional<ReplayBuffer> replay_record(const Trace& trace, double t_r, double tau,
                                          double delta_ss);

/// Replayed value y*(t) = recorded y(t - tau), grid-aligned lookup with no
/// interpolation. Valid for t in [t_r, t_r + tau]; throws OutOfWindowError
/// outside.
Eigen::VectorXd replay_output(const ReplayBuffer& buf, double t);

/// Synthesized constants an executor can report for run summaries.
struct SynthesisConstants {
  std::optional<cplx> s0;
  std::optional<Eigen::Vector2cd> x0;
  std::optional<cplx> a0;
  std::optional<double> m1_bar;
  std::optional<ZdaBranch> branch;
  std::optional<std::string> note;  // set when there is nothing to inject
};

/// Owns one attack's runtime state. taps() hands out closures that borrow
/// the executor, so the executor must outlive the simulate() call.
class AttackExecutor {
 public:
  virtual ~AttackExecutor() = default;
  virtual ChannelTaps taps() = 0;
  virtual AttackResources resources() const = 0;
  virtual Vec2 initial_state_offset() const { return Vec2::Zero(); }
  virtual SynthesisConstants constants() const { return {}; }
};

class NoAttack final : public AttackExecutor {
 public:
  ChannelTaps taps() override { return {}; }
  AttackResources resources() const override { return {}; }
};

class ZdaLinearExecutor final : public AttackExecutor {
 public:
  ZdaLinearExecutor(const LateralModel& model, const OutputMap& map, const ZdaConfig& cfg);
  ChannelTaps taps() override;
  AttackResources resources() const override;
  Vec2 initial_state_offset() const override;
  SynthesisConstants constants() const override;
  const std::optional<ZdaPlan>& plan() const { return plan_; }

 private:
  ZdaConfig cfg_;
  std::optional<ZdaPlan> plan_;
  bool active_row_ = false;  // frozen at pre_measure so substeps agree with the plan's t0
};

struct ZdaNonlinearOptions {
  double t0 = 0.0;
  double eps = 1e-6;
  bool prepare = false;   // regulate |r| below eps first when starting off Z1
  double prep_kp = 2000.0;
};

class ZdaNonlinearExecutor final : public AttackExecutor {
 public:
  ZdaNonlinearExecutor(const LateralModel& model, const ZdaNonlinearOptions& opt);
  ChannelTaps taps() override;
  AttackResources resources() const override;
  SynthesisConstants constants() const override;
  const std::optional<NonlinearZdaPlan>& plan() const { return plan_; }

 private:
  LateralModel model_;
  ZdaNonlinearOptions opt_;
  std::optional<NonlinearZdaPlan> plan_;
  bool preparing_ = false;
  double prep_mz_ = 0.0;  // held over the current step while preparing
};

/// Where the covert nonlinear compensation gets nominal states from.
struct NominalEstimateConfig {
  enum class Source { Exact, Observer } source = Source::Exact;
  cplx pole1{-10.0, 0.0};
  cplx pole2{-12.0, 0.0};
  double init_error_frac = 0.0;  // xhat(0) = (1 + frac) x(0)
};

struct CovertOptions {
  double t0 = 0.0;
  SteeringProfile u_c;                     // ignored when tracking is set
  std::optional<TrackingConfig> tracking;  // integral tracking law on one channel
};

class CovertLinearExecutor final : public AttackExecutor {
 public:
  /// attacker_model / attacker_map may differ from the plant's (model error).
  CovertLinearExecutor(const LateralModel& attacker_model, const OutputMap& attacker_map,
                       const CovertOptions& opt);
  ChannelTaps taps() override;
  AttackResources resources() const override;
  const CovertState& internal_state() const { return state_; }

 private:
  double u_c_at(double t) const;

  LateralModel model_;
  OutputMap map_;
  CovertOptions opt_;
  CovertState state_;
  TrackingState tracking_;
  double u_c_held_ = 0.0;   // tracking law output, held across the step
  bool active_row_ = false;  // injection on/off frozen per row; keeps the plant's
                             // substep inputs aligned with the internal model's
};

class CovertNonlinearExecutor final : public AttackExecutor {
 public:
  CovertNonlinearExecutor(const LateralModel& attacker_model, const CovertOptions& opt,
                          const NominalEstimateConfig& est);
  ChannelTaps taps() override;
  AttackResources resources() const override;
  /// Current nominal-state estimate error against the twin (diagnostics).
  double estimate_error() const { return est_error_; }

 private:
  double u_c_at(double t) const;

  LateralModel model_;
  OutputMap aux_map_;  // yaw rate + lateral accel pair feeding the observer
  CovertOptions opt_;
  NominalEstimateConfig est_;
  CovertState state_;
  ObserverState observer_;
  bool observer_initialized_ = false;
  bool active_row_ = false;
  Vec2 xhat_nominal_ = Vec2::Zero();
  double est_error_ = 0.0;
  TrackingState tracking_;
  double u_c_held_ = 0.0;
  Vec2 u_for_observer_ = Vec2::Zero();
  Eigen::VectorXd y_aux_;
};

struct ReplayOptions {
  double t_r = 20.0;
  double tau = 10.0;
  std::optional<double> delta_ss;  // default: 1.5 * 2 pi f * max |y| over the window
  double inject_level = 0.0;       // steering-channel injection ...
  double inject_from = 0.0;        // ... for t > inject_from (active iff level != 0)
};

class ReplayExecutor final : public AttackExecutor {
 public:
  /// Model-free by interface: only the grid and its own options come in.
  ReplayExecutor(const ReplayOptions& opt, const TimeGrid& grid,
                 std::optional<double> steering_frequency_hz = {});
  ChannelTaps taps() override;
  AttackResources resources() const override;
  SynthesisConstants constants() const override;
  bool active() const { return active_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  ReplayOptions opt_;
  std::optional<double> steer_freq_;
  ReplayBuffer buffer_;
  std::size_t record_first_ = 0;  // grid indices of the recording window
  std::size_t record_last_ = 0;
  bool active_ = false;
  bool checked_ = false;
  std::string note_;
};

}  // namespace latlab

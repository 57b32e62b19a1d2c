#pragma once
// Stealth and impact metrics over a simulated trace, plus a moving-average
// residual monitor. Deviations compare the received outputs against the
// attack-free twin, infinity norm across channels.

#include <cstdint>
#include <optional>
#include <vector>

#include "latlab/sim.hpp"

namespace latlab {

struct DetectorConfig {
  double threshold = 1e-6;
  double window = 0.1;  // s, trailing moving-average window

  /// threshold > 0 and window >= dt; throws std::invalid_argument.
  void validate(double dt) const;
};

struct StealthReport {
  double sup_dev = 0.0;
  double rms_dev = 0.0;
  std::optional<double> first_alarm;
};

struct ImpactReport {
  double sup_state_dev = 0.0;
  double terminal_dev = 0.0;
  double energy = 0.0;  // integral of |x_true - x_nominal|_2^2, rectangle rule
};

/// Row-wise |y_received - y_nominal|_inf.
std::vector<double> output_deviation(const Trace& trace);

/// Row-wise |x_true - x_nominal|_inf.
std::vector<double> state_deviation(const Trace& trace);

StealthReport stealth_report(const Trace& trace, const DetectorConfig& cfg);

ImpactReport impact_report(const Trace& trace);

/// Alarm flag per row: trailing moving average of the output deviation over
/// the window exceeds the threshold.
std::vector<std::uint8_t> residual_alarm(const Trace& trace, const DetectorConfig& cfg);

std::optional<double> first_alarm_time(const Trace& trace, const DetectorConfig& cfg);

/// Controller's-eye residual |y_received - (C xhat + D delta)|_inf per row,
/// from a Luenberger observer driven by the nominal command and the received
/// outputs. Secondary monitor for setups without a nominal twin. Linear
/// output cases only.
std::vector<double> observer_residual(const Trace& trace, const LateralModel& model,
                                      const OutputMap& map, const Eigen::MatrixXd& L);

}  // namespace latlab

#include "latlab/detection.hpp"

#include <cmath>
#include <stdexcept>

namespace latlab {

void DetectorConfig::validate(double dt) const {
  if (!(threshold > 0.0)) throw std::invalid_argument("DetectorConfig: threshold must be > 0");
  if (!(window >= dt))
    throw std::invalid_argument("DetectorConfig: window must cover at least one step");
}

std::vector<double> output_deviation(const Trace& trace) {
  std::vector<double> dev;
  dev.reserve(trace.rows());
  for (std::size_t i = 0; i < trace.rows(); ++i)
    dev.push_back((trace.y_received[i] - trace.y_nominal[i]).cwiseAbs().maxCoeff());
  return dev;
}

std::vector<double> state_deviation(const Trace& trace) {
  std::vector<double> dev;
  dev.reserve(trace.rows());
  for (std::size_t i = 0; i < trace.rows(); ++i)
    dev.push_back((trace.x_true[i] - trace.x_nominal[i]).cwiseAbs().maxCoeff());
  return dev;
}

StealthReport stealth_report(const Trace& trace, const DetectorConfig& cfg) {
  StealthReport rep;
  const std::vector<double> dev = output_deviation(trace);
  double sq = 0.0;
  for (double d : dev) {
    rep.sup_dev = std::max(rep.sup_dev, d);
    sq += d * d;
  }
  if (!dev.empty()) rep.rms_dev = std::sqrt(sq / static_cast<double>(dev.size()));
  rep.first_alarm = first_alarm_time(trace, cfg);
  return rep;
}

ImpactReport impact_report(const Trace& trace) {
  ImpactReport rep;
  const std::vector<double> dev = state_deviation(trace);
  for (double d : dev) rep.sup_state_dev = std::max(rep.sup_state_dev, d);
  if (!dev.empty()) rep.terminal_dev = dev.back();
  for (std::size_t i = 0; i + 1 < trace.rows(); ++i)
    rep.energy += (trace.x_true[i] - trace.x_nominal[i]).squaredNorm() * trace.grid.dt;
  return rep;
}

std::vector<std::uint8_t> residual_alarm(const Trace& trace, const DetectorConfig& cfg) {
  cfg.validate(trace.grid.dt);
  const std::vector<double> dev = output_deviation(trace);
  const auto span = static_cast<std::size_t>(std::llround(cfg.window / trace.grid.dt));
  std::vector<std::uint8_t> alarm(dev.size(), 0);
  double acc = 0.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    acc += dev[i];
    if (i >= span) acc -= dev[i - span];
    const std::size_t used = std::min(i + 1, span);
    if (acc / static_cast<double>(used) > cfg.threshold) alarm[i] = 1;
  }
  return alarm;
}

std::optional<double> first_alarm_time(const Trace& trace, const DetectorConfig& cfg) {
  const std::vector<std::uint8_t> alarm = residual_alarm(trace, cfg);
  for (std::size_t i = 0; i < alarm.size(); ++i)
    if (alarm[i]) return trace.t[i];
  return std::nullopt;
}

std::vector<double> observer_residual(const Trace& trace, const LateralModel& model,
                                      const OutputMap& map, const Eigen::MatrixXd& L) {
  if (map.nonlinear())
    throw std::invalid_argument("observer_residual: linear output cases only");
  ObserverState obs;
  obs.L = L;
  std::vector<double> res;
  res.reserve(trace.rows());
  for (std::size_t i = 0; i < trace.rows(); ++i) {
    const double delta = trace.u_nominal[i](1);
    res.push_back(
        (trace.y_received[i] - map.C * obs.xhat - map.D * delta).cwiseAbs().maxCoeff());
    if (i + 1 < trace.rows())
      obs = observer_step(obs, trace.u_nominal[i], trace.y_received[i], model, map, trace.grid.dt);
  }
  return res;
}

}  // namespace latlab

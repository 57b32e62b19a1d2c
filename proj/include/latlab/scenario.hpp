#pragma once
// Declarative scenario files (JSON), the run pipeline that turns one into a
// trace plus reports, and the bundled scenario set the CLI ships with.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "latlab/attacks.hpp"
#include "latlab/detection.hpp"
#include "latlab/trace_io.hpp"

namespace latlab {

/// Parse or validation failure; path points at the offending JSON node.
struct ScenarioError : std::runtime_error {
  std::string path;
  ScenarioError(const std::string& path_, const std::string& what_)
      : std::runtime_error(path_ + ": " + what_), path(path_) {}
};

struct ZdaLinearSpec {
  ZdaConfig cfg;
};

struct ZdaNonlinearSpec {
  ZdaNonlinearOptions opt;
};

struct CovertLinearSpec {
  CovertOptions opt;
  double cf_error_frac = 0.0;  // attacker model perturbation
  double cr_error_frac = 0.0;
};

struct CovertNonlinearSpec {
  CovertOptions opt;
  NominalEstimateConfig est;
};

struct ReplaySpec {
  ReplayOptions opt;
};

using AttackSpec = std::variant<std::monostate, ZdaLinearSpec, ZdaNonlinearSpec, CovertLinearSpec,
                                CovertNonlinearSpec, ReplaySpec>;

struct ScenarioSpec {
  std::string name;
  VehicleParams vehicle;
  OutputCase output_case = OutputCase::YawRate;
  SteeringProfile steering;
  PlantKind plant = PlantKind::Linear;
  Vec2 x0 = Vec2::Zero();
  TimeGrid grid{0.0, 1e-3, 1000};
  SaturationLimits saturation;
  DetectorConfig detector;
  ControllerConfig controller;
  std::uint64_t seed = 0;
  AttackSpec attack;
};

/// Strict parser: unknown keys are rejected, violated invariants surface as
/// ScenarioError with the JSON path.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);

/// Bundled name or file path, in that order.
ScenarioSpec resolve_scenario(const std::string& name_or_path);

struct RunSummary {
  std::string scenario;
  SynthesisConstants constants;
  StealthReport stealth;
  ImpactReport impact;
  AttackResources resources;
  std::size_t clipped_samples = 0;
  double wall_time_s = 0.0;
  std::optional<std::string> infeasible;
  // Replay extras: shift-aware stealth (received vs recorded segment) and the
  // bit-identity of the replayed window.
  std::optional<double> replay_window_sup_dev;
  std::optional<bool> replay_bit_identical;
};

std::string summary_to_json(const RunSummary& summary);

struct RunResult {
  Trace trace;
  RunSummary summary;
};

/// Build the model, synthesize the attack (an infeasible synthesis is
/// recorded and the run continues attack-free), simulate, and score.
RunResult run_scenario(const ScenarioSpec& spec);

/// Synthesis constants without simulating. infeasible-only results carry the
/// note field.
SynthesisConstants synthesize_only(const ScenarioSpec& spec);

std::vector<std::string> bundled_scenario_names();
const char* bundled_scenario_text(const std::string& name);  // nullptr if unknown

struct SuiteCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Scenario-specific pass/fail assertions used by the CLI suite command.
std::vector<SuiteCheck> suite_checks(const ScenarioSpec& spec, const RunResult& result);

/// Default channel selection for plots: every output channel's received /
/// nominal pair plus the true states.
std::vector<std::string> default_plot_channels(const Trace& trace);

}  // namespace latlab

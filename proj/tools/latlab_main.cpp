// Command line front end: run scenarios, print synthesis constants, or sweep
// the bundled set against its pass/fail checks.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "latlab/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("LATLAB_OUT");
  return env && *env ? env : "out";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_outputs(const std::string& name, const latlab::RunResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  latlab::write_file_atomic((dir / (name + ".csv")).string(), latlab::trace_to_csv(result.trace));
  latlab::write_file_atomic(
      (dir / (name + ".svg")).string(),
      latlab::trace_to_svg(result.trace, latlab::default_plot_channels(result.trace)));
  latlab::write_file_atomic((dir / (name + ".summary.json")).string(),
                            latlab::summary_to_json(result.summary));
}

nlohmann::json constants_json(const latlab::SynthesisConstants& c) {
  nlohmann::json j;
  const auto pair = [](latlab::cplx z) { return nlohmann::json::array({z.real(), z.imag()}); };
  if (c.s0) j["s0"] = pair(*c.s0);
  if (c.x0) j["x0"] = nlohmann::json::array({pair((*c.x0)(0)), pair((*c.x0)(1))});
  if (c.a0) j["a0"] = pair(*c.a0);
  if (c.m1_bar) j["m1_bar"] = *c.m1_bar;
  if (c.branch)
    j["branch"] = *c.branch == latlab::ZdaBranch::Z1   ? "Z1"
                  : *c.branch == latlab::ZdaBranch::Z2 ? "Z2"
                                                       : "off_manifold";
  if (c.note) j["note"] = *c.note;
  return j;
}

int do_run(const std::string& spec_arg, const std::string& out_dir) {
  const latlab::ScenarioSpec spec = latlab::resolve_scenario(spec_arg);
  const latlab::RunResult result = latlab::run_scenario(spec);
  write_outputs(spec.name, result, out_dir);
  const auto& s = result.summary;
  std::printf("%s: sup_dev=%s alarm=%s sup_state_dev=%s clipped=%zu wall=%ss\n",
              spec.name.c_str(), fmt(s.stealth.sup_dev).c_str(),
              s.stealth.first_alarm ? fmt(*s.stealth.first_alarm).c_str() : "never",
              fmt(s.impact.sup_state_dev).c_str(), s.clipped_samples, fmt(s.wall_time_s).c_str());
  if (s.infeasible) std::printf("note: %s\n", s.infeasible->c_str());
  std::printf("wrote %s/%s.{csv,svg,summary.json}\n", out_dir.c_str(), spec.name.c_str());
  return 0;
}

int do_synthesize(const std::string& spec_arg) {
  const latlab::ScenarioSpec spec = latlab::resolve_scenario(spec_arg);
  const latlab::SynthesisConstants c = latlab::synthesize_only(spec);
  std::printf("%s\n", constants_json(c).dump(2).c_str());
  const bool zda_linear = std::holds_alternative<latlab::ZdaLinearSpec>(spec.attack);
  const bool zda_nonlinear = std::holds_alternative<latlab::ZdaNonlinearSpec>(spec.attack);
  const bool no_plan = (zda_linear && !c.s0) ||
                       (zda_nonlinear && (!c.branch || *c.branch != latlab::ZdaBranch::Z1));
  if (no_plan) {
    std::fprintf(stderr, "infeasible: %s\n", c.note.value_or("no plan").c_str());
    return 2;
  }
  return 0;
}

int do_suite(const std::string& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  std::size_t passed = 0, total = 0;
  for (const std::string& name : latlab::bundled_scenario_names()) {
    const latlab::ScenarioSpec spec = latlab::resolve_scenario(name);
    const latlab::RunResult result = latlab::run_scenario(spec);
    write_outputs(name, result, out_dir);
    std::printf("%s\n", name.c_str());
    for (const latlab::SuiteCheck& check : latlab::suite_checks(spec, result)) {
      ++total;
      passed += check.passed;
      std::printf("  %s  %s%s%s%s\n", check.passed ? "pass" : "FAIL", check.name.c_str(),
                  check.detail.empty() ? "" : "  (", check.detail.c_str(),
                  check.detail.empty() ? "" : ")");
    }
  }
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::printf("suite: %zu/%zu checks passed in %ss\n", passed, total, fmt(took).c_str());
  return passed == total ? 0 : 1;
}

int do_list() {
  for (const std::string& name : latlab::bundled_scenario_names()) std::printf("%s\n", name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lateral vehicle dynamics attack bench"};
  app.require_subcommand(1);

  std::string spec_arg;
  std::string out_dir = default_out_dir();

  CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario, write csv/svg/summary");
  run_cmd->add_option("spec", spec_arg, "bundled scenario name or JSON file")->required();
  run_cmd->add_option("--out", out_dir, "output directory (default $LATLAB_OUT or ./out)");

  CLI::App* synth_cmd = app.add_subcommand("synthesize", "print attack synthesis constants");
  synth_cmd->add_option("spec", spec_arg, "bundled scenario name or JSON file")->required();

  CLI::App* suite_cmd = app.add_subcommand("suite", "run all bundled scenarios and their checks");
  suite_cmd->add_option("--out", out_dir, "output directory (default $LATLAB_OUT or ./out)");

  app.add_subcommand("list", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(spec_arg, out_dir);
    if (synth_cmd->parsed()) return do_synthesize(spec_arg);
    if (suite_cmd->parsed()) return do_suite(out_dir);
    return do_list();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hkcs/hkcs.h"

namespace {

struct ScenarioDeleter {
  void operator()(hkcs_scenario* s) const { hkcs_scenario_free(s); }
};
struct TrajectoryDeleter {
  void operator()(hkcs_trajectory* t) const { hkcs_trajectory_free(t); }
};
using ScenarioPtr = std::unique_ptr<hkcs_scenario, ScenarioDeleter>;
using TrajectoryPtr = std::unique_ptr<hkcs_trajectory, TrajectoryDeleter>;

struct Flags {
  std::string config;
  std::string out;
  std::string grid;
  std::string trajectory;
  std::string bundle;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

int report_error(hkcs_status status) {
  std::cerr << "hkcs: error [" << hkcs_last_error_kind() << "]: " << hkcs_last_error() << "\n";
  return status;
}

// Text is printed even when the command ends in a check failure.
int emit(hkcs_status status, char* text) {
  if (text) {
    std::fputs(text, stdout);
    hkcs_string_free(text);
  }
  if (status != HKCS_OK && status != HKCS_CHECK_FAILED) return report_error(status);
  return status;
}

ScenarioPtr load(const Flags& f, bool check_hypotheses, hkcs_status& status) {
  hkcs_options options{};
  options.check_hypotheses = check_hypotheses ? 1 : 0;
  if (f.seed) {
    options.override_seed = 1;
    options.seed = *f.seed;
  }
  if (f.tolerance) {
    options.override_tolerance = 1;
    options.tolerance = *f.tolerance;
  }
  hkcs_scenario* raw = nullptr;
  status = hkcs_scenario_load(f.config.c_str(), &options, &raw);
  ScenarioPtr s(raw);
  if (s)
    for (size_t i = 0; i < hkcs_scenario_warning_count(s.get()); ++i)
      std::cerr << "hkcs: warning: " << hkcs_scenario_warning(s.get(), i) << "\n";
  return s;
}

int cmd_bundle(const Flags& f, bool verify) {
  hkcs_status status;
  ScenarioPtr s = load(f, verify, status);
  if (!s) return report_error(status);
  char* text = nullptr;
  status = hkcs_run_bundle(s.get(), f.out.c_str(), verify ? 1 : 0, &text);
  return emit(status, text);
}

int cmd_bounds(const Flags& f) {
  hkcs_status status;
  ScenarioPtr s = load(f, false, status);
  if (!s) return report_error(status);
  TrajectoryPtr t;
  if (!f.trajectory.empty()) {
    hkcs_trajectory* raw = nullptr;
    status = hkcs_trajectory_read(s.get(), f.trajectory.c_str(), &raw);
    if (status != HKCS_OK) return report_error(status);
    t.reset(raw);
  }
  char* text = nullptr;
  status = hkcs_bounds(s.get(), t.get(), &text);
  return emit(status, text);
}

int cmd_sweep(const Flags& f) {
  hkcs_status status;
  ScenarioPtr s = load(f, false, status);
  if (!s) return report_error(status);
  char* text = nullptr;
  status = hkcs_sweep(s.get(), f.grid.c_str(), f.out.c_str(), f.threads, &text);
  return emit(status, text);
}

int cmd_report(const Flags& f) {
  char* text = nullptr;
  const hkcs_status status = hkcs_bundle_summary(f.bundle.c_str(), &text);
  return emit(status, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed consensus and flocking simulator with convergence certificates"};
  app.set_version_flag("--version", std::string(hkcs_version()));
  app.require_subcommand(1, 1);

  Flags f;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--tolerance", f.tolerance, "Relative slack for the decay and contraction checks")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", f.seed, "Replace the scenario seed");
  };

  auto* run = app.add_subcommand("run", "Integrate and write a trajectory bundle");
  add_common(run);
  run->add_option("--out", f.out, "Output directory")->required();

  auto* verify = app.add_subcommand("verify", "Integrate, run every bound check and write a report");
  add_common(verify);
  verify->add_option("--out", f.out, "Output directory")->required();

  auto* bounds = app.add_subcommand("bounds", "Print the certified constants");
  add_common(bounds);
  bounds->add_option("--trajectory", f.trajectory, "Trajectory CSV for the second-order empirical constants")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Verify every cell of a parameter grid");
  add_common(sweep);
  sweep->add_option("--grid", f.grid, "Grid such as \"tau=0,0.5,1;T=1,2\" over tau, T, duty, beta, N")->required();
  sweep->add_option("--out", f.out, "Output directory")->required();
  sweep->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");

  auto* report = app.add_subcommand("report", "Summarise a bundle directory");
  report->add_option("bundle", f.bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return HKCS_CONFIG_ERROR;
  }

  if (run->parsed()) return cmd_bundle(f, false);
  if (verify->parsed()) return cmd_bundle(f, true);
  if (bounds->parsed()) return cmd_bounds(f);
  if (sweep->parsed()) return cmd_sweep(f);
  return cmd_report(f);
}

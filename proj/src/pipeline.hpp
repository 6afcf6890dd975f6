#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "scenario_io.hpp"

namespace hkcs {

// A parsed configuration together with the scenario it describes.
struct Prepared {
  ScenarioConfig config;
  Scenario scenario;
  std::vector<std::string> warnings;
  std::string hash;
};

Prepared prepare(ScenarioConfig config);
std::vector<std::string> scenario_warnings(const ScenarioConfig& config, const Scenario& s);

struct Verification {
  BoundReport report;
  bool degenerate = false;  // no certified rate: Gamma (or C* phi_hat^gamma) outside (0, 1)
  std::optional<double> certified_rate;
  int exit_code() const { return degenerate || !report.passed() ? 4 : 0; }
};

// Runs the full check suite. Hypothesis failures (missing PE declaration,
// digraph not strongly connected, vanishing influence floor) throw.
Verification verify_trajectory(const Prepared& p, const Trajectory& traj);

struct Outcome {
  int exit_code = 0;
  std::string text;  // human-readable summary for standard output
};

// Writes config.json, trajectory.csv, run.json and timing.json into dir, plus
// report.json when verify is set.
Outcome run_bundle(const Prepared& p, const std::string& dir, bool verify);

// Theoretical constants with 12 significant digits. Second-order empirical
// constants need a trajectory.
Outcome bounds(const Prepared& p, const Trajectory* traj);

// grid: "name=v1,v2;name=..." over tau, T, duty, beta and N.
using GridAxis = std::pair<std::string, std::vector<double>>;
std::vector<GridAxis> parse_grid(const std::string& spec);
ScenarioConfig apply_cell(const ScenarioConfig& base, const std::vector<std::pair<std::string, double>>& cell);
Outcome sweep(const Prepared& p, const std::string& grid, const std::string& dir, unsigned threads = 0);

// Summary of an existing bundle directory.
Outcome bundle_summary(const std::string& dir);

}  // namespace hkcs

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "dynamics.hpp"

namespace hkcs {

struct TopologyConfig {
  enum class Family { Complete, Ring, Random, Matrix };
  Family family = Family::Complete;
  std::uint64_t seed = 0;  // random only
  double edge_prob = 0.5;  // random only
  std::vector<std::vector<int>> chi;  // matrix only

  bool operator==(const TopologyConfig&) const = default;
};

struct DelayOverride {
  int i = 0;
  int j = 0;
  DelaySpec spec = DelaySpec::constant(0.0, 0.0);

  bool operator==(const DelayOverride&) const = default;
};

struct WeightOverride {
  int i = 0;
  int j = 0;
  WeightSchedule schedule = WeightSchedule::constant(1.0);

  bool operator==(const WeightOverride&) const = default;
};

struct HistoryConfig {
  enum class Kind { Explicit, RandomBox };
  enum class Shape { Constant, Linear };
  Kind kind = Kind::RandomBox;
  std::vector<History> positions;
  std::vector<History> velocities;
  // random_box: every component drawn uniformly from [low, high].
  double low = -1.0;
  double high = 1.0;
  double velocity_low = -1.0;
  double velocity_high = 1.0;
  Shape shape = Shape::Constant;
  std::uint64_t seed = 0;

  bool operator==(const HistoryConfig&) const = default;
};

// Declarative scenario; every default is resolved at parse time.
struct ScenarioConfig {
  int schema_version = 1;
  ModelOrder order = ModelOrder::First;
  int agents = 2;
  int dim = 1;
  TopologyConfig topology;
  double tau_max = 0.0;
  DelaySpec delay_default = DelaySpec::constant(0.0, 0.0);
  std::vector<DelayOverride> delay_overrides;
  WeightSchedule weight_default = WeightSchedule::constant(1.0);
  std::vector<WeightOverride> weight_overrides;
  std::optional<PeDeclaration> pe;
  InfluenceFunction influence = InfluenceFunction::constant(1.0);
  HistoryConfig histories;
  double step = 1e-2;
  double horizon = 10.0;
  AnalysisSettings analysis;
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

enum class ParseMode { Run, Verify };

// Throws SchemaError (with the offending field path) for malformed input and
// HypothesisError when Verify mode finds a theorem hypothesis violated.
ScenarioConfig parse_config(const std::string& text, ParseMode mode = ParseMode::Run);
ScenarioConfig load_config(const std::string& path, ParseMode mode = ParseMode::Run);
// Canonical document: two-space indentation, fixed key order, trailing newline.
std::string serialize_config(const ScenarioConfig& config);
// Theorem hypotheses checked by Verify mode; throws HypothesisError.
void check_hypotheses(const ScenarioConfig& config);

Scenario build_scenario(const ScenarioConfig& config);

// Hex SHA-256 of the canonical serialisation.
std::string config_hash(const ScenarioConfig& config);

// CSV with header t,agent,component_0..[,v_component_0..]; one row per
// (time, agent) covering the history grid and every integration node.
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory(const Trajectory& traj, const std::string& path);
// History rows are checked against the scenario; node rows are rebuilt into a
// dense-output trajectory. Throws FormatError naming the line.
Trajectory read_trajectory(const std::string& path, const Scenario& s);
Trajectory parse_trajectory(const std::string& text, const Scenario& s);

std::string report_json(const BoundReport& report, const std::string& config_sha256);
void write_report(const BoundReport& report, const std::string& config_sha256, const std::string& path);

std::string read_text_file(const std::string& path);
// Throws Io with the system error text.
void write_text_file(const std::string& path, const std::string& text);

// Shortest text that reads back to the same double.
std::string format_double(double x);

}  // namespace hkcs

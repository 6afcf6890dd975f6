#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "scenario_io.hpp"

using namespace hkcs;

namespace {

std::string schema_error(const std::string& text, ParseMode mode = ParseMode::Run) {
  try {
    parse_config(text, mode);
  } catch (const SchemaError& e) {
    return e.path();
  } catch (const Error& e) {
    return std::string("kind:") + to_string(e.kind());
  }
  return "accepted";
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const ScenarioConfig c = parse_config(R"({"schema_version": 1, "n_agents": 2})");
  EXPECT_EQ(c.order, ModelOrder::First);
  EXPECT_EQ(c.agents, 2);
  EXPECT_EQ(c.dim, 1);
  EXPECT_DOUBLE_EQ(c.step, 1e-2);
  EXPECT_DOUBLE_EQ(c.horizon, 10.0);
  EXPECT_EQ(c.analysis.directions, 32);
  EXPECT_DOUBLE_EQ(c.analysis.tolerance, 1e-6);
  EXPECT_DOUBLE_EQ(c.analysis.lemma_tolerance, 1e-9);
}

TEST(Config, DefaultStepFollowsDelay) {
  const ScenarioConfig c = parse_config(
      R"({"schema_version": 1, "n_agents": 2, "tau_max": 0.05, "delay": {"default": {"kind": "constant", "value": 0.05}}})");
  EXPECT_DOUBLE_EQ(c.step, 0.005);
}

TEST(Config, VerifyRejectsDisconnectedDigraph) {
  const std::string text = R"({"schema_version": 1, "n_agents": 2,
    "topology": {"family": "matrix", "chi": [[0, 1], [0, 0]]}, "pe": {"T": 1, "alpha_tilde": 0.5}})";
  EXPECT_NO_THROW(parse_config(text, ParseMode::Run));
  try {
    parse_config(text, ParseMode::Verify);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Hypothesis);
    EXPECT_NE(std::string(e.what()).find("strongly connected"), std::string::npos);
  }
}

TEST(Config, VerifyRejectsDarkArc) {
  try {
    load_config(std::string(HKCS_SOURCE_DIR) + "/scenarios/dark_arc.json", ParseMode::Verify);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Hypothesis);
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos);
  }
}

TEST(Config, SchemaErrorsCarryPaths) {
  EXPECT_EQ(schema_error(R"({"n_agents": 2})"), "$.schema_version");
  EXPECT_EQ(schema_error(R"({"schema_version": 2, "n_agents": 2})"), "$.schema_version");
  EXPECT_EQ(schema_error(R"({"schema_version": 1})"), "$.n_agents");
  EXPECT_EQ(schema_error(R"({"schema_version": 1, "n_agents": 2, "colour": 1})"), "$.colour");
  EXPECT_EQ(schema_error(R"({"schema_version": 1, "n_agents": "two"})"), "$.n_agents");
  EXPECT_EQ(schema_error(R"({"schema_version": 1, "n_agents": 2, "integrator": {"step": -1}})"), "$.integrator.step");
  EXPECT_EQ(schema_error(R"({"schema_version": 1, "n_agents": 3, "tau_max": 1,
    "delay": {"overrides": [{"i": 0, "j": 1, "spec": {"kind": "constant", "value": 2}}]}})"),
            "$.delay.overrides[0].spec");
  EXPECT_EQ(schema_error(R"({"schema_version": 1, "n_agents": 2,
    "influence": {"family": "radial_rational", "k0": 1}})"),
            "$.influence.beta");
  EXPECT_EQ(schema_error("{not json"), "$");
}

TEST(Config, RoundTripRandomConfigs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ScenarioConfig c = random_config(seed);
    const std::string text = serialize_config(c);
    const ScenarioConfig back = parse_config(text);
    EXPECT_EQ(back, c) << "seed " << seed << "\n" << text;
    EXPECT_EQ(serialize_config(back), text);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(parse_config(serialize_config(random_first_order_config(seed))), random_first_order_config(seed));
    EXPECT_EQ(parse_config(serialize_config(random_second_order_config(seed))), random_second_order_config(seed));
  }
}

TEST(Config, HashTracksContent) {
  const ScenarioConfig a = random_config(1);
  ScenarioConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 64u);
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, RandomBoxIsSeeded) {
  const std::string text = R"({"schema_version": 1, "n_agents": 4, "dimension": 2,
    "histories": {"kind": "random_box", "low": -2, "high": 3, "seed": 9}})";
  const Scenario a = build_scenario(parse_config(text));
  const Scenario b = build_scenario(parse_config(text));
  ASSERT_EQ(a.positions.size(), 4u);
  EXPECT_EQ(a.positions, b.positions);
  for (const auto& h : a.positions)
    for (double x : h.values().front()) {
      EXPECT_GE(x, -2.0);
      EXPECT_LE(x, 3.0);
    }
}

TEST(Trajectory, RowCountAndRoundTrip) {
  const Scenario s = build_scenario(parse_config(R"({"schema_version": 1, "n_agents": 2, "dimension": 2,
    "tau_max": 0.3, "delay": {"default": {"kind": "constant", "value": 0.3}}, "integrator": {"horizon": 2}})"));
  const Trajectory traj = integrate(s);
  const std::string csv = trajectory_csv(traj);
  EXPECT_EQ(count_lines(csv), 1 + traj.all_sample_times().size() * 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,agent,component_0,component_1");
  const Trajectory back = parse_trajectory(csv, s);
  EXPECT_EQ(back.nodes(), traj.nodes());
  EXPECT_EQ(trajectory_csv(back), csv);
  for (double t : {-0.2, 0.0, 0.77, 2.0}) EXPECT_EQ(back.position(1, t), traj.position(1, t));
}

TEST(Trajectory, SecondOrderHeader) {
  const Scenario s = build_scenario(parse_config(R"({"schema_version": 1, "order": "second", "n_agents": 3,
    "integrator": {"horizon": 1}})"));
  const std::string csv = trajectory_csv(integrate(s));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,agent,component_0,v_component_0");
}

TEST(Trajectory, HistoryOnly) {
  const Scenario s = build_scenario(parse_config(R"({"schema_version": 1, "n_agents": 2, "tau_max": 0.5,
    "delay": {"default": {"kind": "constant", "value": 0.5}}, "integrator": {"horizon": 0}})"));
  const Trajectory traj = integrate(s);
  EXPECT_EQ(traj.nodes().size(), 1u);
  const std::string csv = trajectory_csv(traj);
  EXPECT_GT(count_lines(csv), 3u);
  EXPECT_EQ(trajectory_csv(parse_trajectory(csv, s)), csv);
}

TEST(Trajectory, RejectsMalformedFiles) {
  const Scenario s = build_scenario(parse_config(R"({"schema_version": 1, "n_agents": 2, "integrator": {"horizon": 1}})"));
  const std::string good = trajectory_csv(integrate(s));
  auto message = [&](const std::string& text) {
    try {
      parse_trajectory(text, s);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Format);
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  EXPECT_EQ(message(good), "accepted");
  EXPECT_EQ(message("t,agent,x\n").rfind("line 1:", 0), 0u);
  std::string swapped = good;
  const auto first = swapped.find("\n0,0,");
  swapped.replace(first + 1, 4, "0,1,");
  EXPECT_EQ(message(swapped).rfind("line 2:", 0), 0u);
  EXPECT_NE(message(good + "0.5,0,1\n").find("strictly increasing"), std::string::npos);
}

TEST(Trajectory, ChecksSurviveRoundTrip) {
  const ScenarioConfig cfg = random_first_order_config(4);
  const Scenario s = build_scenario(cfg);
  const Trajectory traj = integrate(s);
  const Trajectory back = parse_trajectory(trajectory_csv(traj), s);
  const auto dirs = directions(s.dim, 32, s.seed);
  const auto c = first_order_constants(s);
  const BoundReport a = check_first_order(s, traj, c, dirs);
  const BoundReport b = check_first_order(s, back, c, dirs);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t k = 0; k < a.checks.size(); ++k) EXPECT_EQ(a.checks[k].status, b.checks[k].status);
  EXPECT_EQ(report_json(a, "x"), report_json(b, "x"));
}

TEST(Report, EmptyAndDeterministic) {
  BoundReport empty;
  const auto doc = nlohmann::json::parse(report_json(empty, "abc"));
  EXPECT_EQ(doc["checks"].size(), 0u);
  EXPECT_EQ(doc["config_sha256"], "abc");
  EXPECT_TRUE(doc["passed"].get<bool>());

  const ScenarioConfig cfg = random_first_order_config(9);
  const Scenario s = build_scenario(cfg);
  auto run = [&] {
    const Trajectory traj = integrate(s);
    return report_json(check_first_order(s, traj, first_order_constants(s), directions(s.dim, 32, s.seed)),
                       config_hash(cfg));
  };
  EXPECT_EQ(run(), run());
}

TEST(Report, SkippedMarginIsNull) {
  BoundReport r;
  r.checks.push_back({"x", "d", std::nan(""), 1e-9, CheckStatus::Skipped, "not enough intervals"});
  const auto doc = nlohmann::json::parse(report_json(r, ""));
  EXPECT_TRUE(doc["checks"][0]["margin"].is_null());
  EXPECT_EQ(doc["checks"][0]["status"], "skipped");
  EXPECT_EQ(doc["checks"][0]["note"], "not enough intervals");
}

TEST(Format, Numbers) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(-0.25), "-0.25");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

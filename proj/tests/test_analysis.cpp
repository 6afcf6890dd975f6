#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "analysis.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace hkcs;

namespace {

Scenario from_json(const std::string& text) { return build_scenario(parse_config(text)); }

BoundReport check(const Scenario& s, const Trajectory& traj) {
  const auto dirs = directions(s.dim, s.analysis.directions, s.seed);
  if (s.order == ModelOrder::First) return check_first_order(s, traj, first_order_constants(s), dirs);
  return check_second_order(s, traj, second_order_constants(s, &traj), dirs);
}

std::string two_agent_pe(const std::string& order, double k, const std::string& extra_histories = "") {
  return R"({"schema_version": 1, "order": ")" + order + R"(", "n_agents": 2,
    "topology": {"family": "complete"}, "pe": {"T": 1, "alpha_tilde": 1},
    "influence": {"family": "constant", "k0": )" +
         std::to_string(k) + R"(},
    "histories": {"kind": "explicit", "agents": [)" +
         (!extra_histories.empty() ? extra_histories
          : order == "first"
              ? std::string(R"({"position": {"kind": "constant", "point": [0]}},
                               {"position": {"kind": "constant", "point": [1]}})")
              : std::string(R"({"position": {"kind": "constant", "point": [0]}, "velocity": {"kind": "constant", "point": [0.5]}},
                               {"position": {"kind": "constant", "point": [1]}, "velocity": {"kind": "constant", "point": [-0.5]}})")) +
         R"(]}, "integrator": {"step": 0.005, "horizon": 8}})";
}

}  // namespace

TEST(Diameter, PointSets) {
  const std::vector<double> same{0.3, 0.3, 0.3, 0.3};
  EXPECT_DOUBLE_EQ(point_diameter(same, 2, 2), 0.0);
  const std::vector<double> pair{0.0, 1.0};
  EXPECT_DOUBLE_EQ(point_diameter(pair, 2, 1), 1.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + trial;
    const int d = 1 + trial % 3;
    std::vector<double> pts(static_cast<std::size_t>(n) * d);
    for (double& x : pts) x = g(rng);
    double brute = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double sq = 0.0;
        for (int c = 0; c < d; ++c) sq += std::pow(pts[i * d + c] - pts[j * d + c], 2);
        brute = std::max(brute, std::sqrt(sq));
      }
    EXPECT_DOUBLE_EQ(point_diameter(pts, n, d), brute);
  }
}

TEST(BaseConstants, ConstantAndLinearHistories) {
  Scenario s = from_json(R"({"schema_version": 1, "n_agents": 2, "dimension": 2, "tau_max": 1,
    "histories": {"kind": "explicit", "agents": [
      {"position": {"kind": "constant", "point": [3, 4]}},
      {"position": {"kind": "constant", "point": [1, 0]}}]}})");
  BaseConstants b = base_constants(s);
  EXPECT_DOUBLE_EQ(b.c0, 5.0);
  EXPECT_DOUBLE_EQ(b.m0x, 0.0);
  s.positions[1] = History::linear({0.0, 0.0}, {1.0, 0.0}, 1.0);
  b = base_constants(s);
  EXPECT_DOUBLE_EQ(b.m0x, 1.0);
}

TEST(BaseConstants, SampledHistoriesMatchDenseGrid) {
  Scenario s = from_json(R"({"schema_version": 1, "n_agents": 2, "dimension": 2, "tau_max": 2,
    "histories": {"kind": "explicit", "agents": [
      {"position": {"kind": "sampled", "times": [-2, -1.3, -0.4, 0], "values": [[0, 1], [2, -1], [-1, 0.5], [0.2, 0.2]]}},
      {"position": {"kind": "sampled", "times": [-2, -0.7, 0], "values": [[1, 1], [-3, 0], [0, 0]]}}]}})");
  const BaseConstants b = base_constants(s);
  double c0 = 0.0;
  double m0x = 0.0;
  const int n = 4000;
  for (int i = 0; i < 2; ++i) {
    std::vector<std::vector<double>> pts;
    for (int k = 0; k <= n; ++k) pts.push_back(s.positions[i].at(-2.0 + 2.0 * k / n));
    for (const auto& p : pts) c0 = std::max(c0, std::hypot(p[0], p[1]));
    for (std::size_t a = 0; a < pts.size(); a += 8)
      for (std::size_t c = 0; c < pts.size(); c += 8)
        m0x = std::max(m0x, std::hypot(pts[a][0] - pts[c][0], pts[a][1] - pts[c][1]));
  }
  EXPECT_NEAR(b.c0, c0, 1e-9);
  EXPECT_GE(b.m0x, m0x - 1e-12);
  EXPECT_NEAR(b.m0x, m0x, 1e-2);
}

TEST(IntervalQuantities, InitialIntervalCoversCrossTimePairs) {
  const Scenario s = from_json(R"({"schema_version": 1, "n_agents": 2, "tau_max": 1,
    "delay": {"default": {"kind": "constant", "value": 1}},
    "histories": {"kind": "explicit", "agents": [
      {"position": {"kind": "linear", "start": [0], "end": [1]}},
      {"position": {"kind": "constant", "point": [0.5]}}]}, "integrator": {"horizon": 3}})");
  const Trajectory traj = integrate(s);
  const auto q = interval_quantities(traj, 0, 2.0, directions(1, 2, 0));
  EXPECT_DOUBLE_EQ(q.position_diameter, 1.0);
  EXPECT_DOUBLE_EQ(q.start, -1.0);
  EXPECT_DOUBLE_EQ(q.end, 0.0);
}

TEST(IntervalQuantities, ConsensusHasZeroDiameters) {
  const Scenario s = from_json(R"({"schema_version": 1, "n_agents": 3, "tau_max": 0.5,
    "delay": {"default": {"kind": "constant", "value": 0.5}},
    "histories": {"kind": "explicit", "agents": [
      {"position": {"kind": "constant", "point": [2]}},
      {"position": {"kind": "constant", "point": [2]}},
      {"position": {"kind": "constant", "point": [2]}}]}, "integrator": {"horizon": 6}})");
  const Trajectory traj = integrate(s);
  for (int n = 0; n < 4; ++n) EXPECT_NEAR(interval_quantities(traj, n, 1.5, directions(1, 2, 0)).position_diameter, 0.0, 1e-15);
}

TEST(Constants, GammaAndRate) {
  EXPECT_NEAR(gamma_constant(1.0, 1, 1.0, 0.0, 1.0, 1.0, 2), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(gamma_constant(1.0, 1, 1.0, 0.0, 1.0, 1.0, 2), 0.135335, 1e-6);
  EXPECT_EQ(gamma_constant(1.0, 2, 1.0, 0.5, 0.0, 1.0, 3), 0.0);
  for (double K : {0.2, 0.5, 1.0})
    for (int gamma : {1, 2, 4}) {
      const double G = gamma_constant(K, gamma, 1.3, 0.4, 0.9 * K, 1.0 / K, 5);
      EXPECT_GT(G, 0.0);
      EXPECT_LT(G, 1.0);
    }
  EXPECT_NEAR(decay_rate_first(1.0 - std::exp(-1.0), 1, 1.0, 0.0), 1.0, 1e-14);
  EXPECT_NEAR(decay_rate_first(std::exp(-2.0), 1, 2.0, 0.0), -std::log(1.0 - std::exp(-2.0)) / 2.0, 1e-15);
  EXPECT_NEAR(decay_rate_first(std::exp(-2.0), 1, 2.0, 0.0), 0.0727067, 1e-7);
  EXPECT_NEAR(decay_rate_first(1e-12, 1, 1.0, 0.0), 1e-12, 1e-20);
  EXPECT_THROW(decay_rate_first(0.0, 1, 1.0, 0.0), Error);
}

TEST(Constants, FirstOrderTwoAgents) {
  const Scenario s = from_json(two_agent_pe("first", 1.0));
  const FirstOrderConstants c = first_order_constants(s);
  EXPECT_EQ(c.depth, 1);
  EXPECT_DOUBLE_EQ(c.period, 1.0);
  EXPECT_NEAR(c.Gamma, std::exp(-2.0), 1e-15);
  ASSERT_TRUE(c.rate);
  EXPECT_NEAR(*c.rate, -std::log1p(-std::exp(-2.0)), 1e-15);
}

TEST(Constants, FirstOrderNeedsPe) {
  const Scenario s = from_json(oracle::closed_form_first_order(0.01));
  try {
    first_order_constants(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Hypothesis);
  }
}

TEST(Constants, SecondOrderConstantInfluence) {
  const Scenario s = from_json(two_agent_pe("second", 0.9));
  const Trajectory traj = integrate(s);
  const SecondOrderConstants c = second_order_constants(s, &traj);
  ASSERT_FALSE(c.Gamma.empty());
  const double first = gamma_constant(0.9, 1, 1.0, 0.0, 0.9, 1.0, 2);
  for (double G : c.Gamma) EXPECT_DOUBLE_EQ(G, first);
  EXPECT_GT(c.phi_hat, 0.0);
  ASSERT_TRUE(c.mu);
  EXPECT_GT(*c.mu, 0.0);
}

TEST(Constants, SecondOrderGammaNonincreasing) {
  ScenarioConfig cfg = random_second_order_config(3);
  const Scenario s = build_scenario(cfg);
  const Trajectory traj = integrate(s);
  const SecondOrderConstants c = second_order_constants(s, &traj);
  ASSERT_GT(c.Gamma.size(), 2u);
  for (std::size_t k = 1; k < c.Gamma.size(); ++k) EXPECT_LE(c.Gamma[k], c.Gamma[k - 1]);
  const SecondOrderConstants without = second_order_constants(s);
  EXPECT_FALSE(without.empirical);
  EXPECT_DOUBLE_EQ(without.c_star, c.c_star);
}

TEST(Checks, ConsensusAtStartPasses) {
  const Scenario s = from_json(two_agent_pe("first", 1.0, R"({"position": {"kind": "constant", "point": [0.4]}},
                                                             {"position": {"kind": "constant", "point": [0.4]}})"));
  const BoundReport r = check(s, integrate(s));
  EXPECT_TRUE(r.passed());
  for (const auto& c : r.checks)
    if (c.status != CheckStatus::Skipped) EXPECT_GE(c.margin, 0.0) << c.id;
}

TEST(Checks, TwoAgentClosedFormPasses) {
  const Scenario s = from_json(two_agent_pe("first", 1.0));
  const BoundReport r = check(s, integrate(s));
  EXPECT_TRUE(r.passed());
  ASSERT_NE(r.find("decay_estimate"), nullptr);
  EXPECT_EQ(r.find("decay_estimate")->status, CheckStatus::Pass);
}

TEST(Checks, FlagshipRingHasEveryRecord) {
  const ScenarioConfig cfg = load_config(std::string(HKCS_SOURCE_DIR) + "/scenarios/flagship_first_order.json");
  const Scenario s = build_scenario(cfg);
  const BoundReport r = check(s, integrate(s));
  EXPECT_TRUE(r.passed());
  for (const char* id : {"decay_estimate", "interval_contraction", "projection_sandwich", "projection_bounds",
                         "opinion_bound", "diameter_monotone", "influence_floor"}) {
    ASSERT_NE(r.find(id), nullptr) << id;
    EXPECT_EQ(r.find(id)->status, CheckStatus::Pass) << id;
  }
  double D0 = 0.0;
  for (const auto& [k, v] : r.constants)
    if (k == "D0") D0 = v;
  EXPECT_GT(D0, 0.0);
  EXPECT_DOUBLE_EQ(r.find("decay_estimate")->tolerance, 1e-6 * D0);
}

TEST(Checks, EqualVelocitiesPass) {
  const Scenario s = from_json(two_agent_pe("second", 1.0,
                                            R"({"position": {"kind": "constant", "point": [0]}, "velocity": {"kind": "constant", "point": [0.3]}},
                                               {"position": {"kind": "constant", "point": [1]}, "velocity": {"kind": "constant", "point": [0.3]}})"));
  const Trajectory traj = integrate(s);
  for (double t : {0.0, 2.0, 8.0}) EXPECT_NEAR(diameters_xv(traj, t).v, 0.0, 1e-15);
  EXPECT_TRUE(check(s, traj).passed());
}

TEST(Checks, SecondOrderClosedFormRateDominatesMu) {
  const double K = 0.9;
  const Scenario s = from_json(two_agent_pe("second", K));
  const Trajectory traj = integrate(s);
  const BoundReport r = check(s, traj);
  EXPECT_TRUE(r.passed());
  ASSERT_NE(r.find("velocity_decay"), nullptr);
  EXPECT_EQ(r.find("velocity_decay")->status, CheckStatus::Pass);
  std::vector<double> t, v;
  for (double x = 0.5; x <= 6.0; x += 0.25) {
    t.push_back(x);
    v.push_back(diameters_xv(traj, x).v);
  }
  const double fitted = fit_decay(t, v);
  EXPECT_NEAR(fitted, 2.0 * K, 1e-6);
  EXPECT_GE(fitted, *second_order_constants(s, &traj).mu);
}

// Four-agent ring with sinusoidal delays, blinking weights and beta = 0.5;
// the depth is 3, so the divergence condition fails and only the checks run.
TEST(Checks, RingWithSinusoidalDelays) {
  const Scenario s = from_json(R"({"schema_version": 1, "order": "second", "n_agents": 4, "dimension": 2,
    "topology": {"family": "ring"}, "tau_max": 0.4,
    "delay": {"default": {"kind": "sinusoid", "base": 0.25, "amplitude": 0.15, "omega": 1.5, "phase": 0}},
    "weights": {"default": {"kind": "blink", "on": 0.6, "period": 1}},
    "pe": {"T": 1, "alpha_tilde": 0.6},
    "influence": {"family": "radial_rational", "k0": 1, "beta": 0.5},
    "histories": {"kind": "random_box", "velocity_low": -0.5, "velocity_high": 0.5, "seed": 8},
    "integrator": {"horizon": 21}, "seed": 8})");
  EXPECT_EQ(s.influence.divergence_class(depth(s.graph)), DivergenceClass::Converges);
  const double P = *s.interval_length();
  EXPECT_NEAR(P, 3 * 1.4 + 0.4, 1e-12);
  Scenario longer = s;
  longer.horizon = 5 * P;
  const BoundReport r = check(longer, integrate(longer));
  for (const auto& c : r.checks)
    if (c.id != "position_diameter_bounded") EXPECT_NE(c.status, CheckStatus::Fail) << c.id << " " << c.margin;
}

TEST(Fit, DecayRate) {
  std::vector<double> t, v;
  for (int k = 0; k < 40; ++k) {
    t.push_back(0.1 * k);
    v.push_back(2.0 * std::exp(-3.0 * 0.1 * k));
  }
  EXPECT_NEAR(fit_decay(t, v), 3.0, 1e-9);
  std::vector<double> flat(t.size(), 0.7);
  EXPECT_NEAR(fit_decay(t, flat), 0.0, 1e-15);
  std::vector<double> bad = v;
  bad[3] = 0.0;
  EXPECT_THROW(fit_decay(t, bad), Error);
}

TEST(Fit, TwoAgentFirstOrderRate) {
  const double K = 0.7;
  const Scenario s = from_json(two_agent_pe("first", K));
  const Trajectory traj = integrate(s);
  std::vector<double> t, v;
  for (double x = 0.0; x <= 8.0; x += 0.1) {
    t.push_back(x);
    v.push_back(diameter(traj, x));
  }
  EXPECT_NEAR(fit_decay(t, v), 2.0 * K, 1e-3);
}

TEST(Directions, DeterministicUnitVectors) {
  const auto a = directions(3, 32, 5);
  EXPECT_EQ(a, directions(3, 32, 5));
  ASSERT_EQ(a.size(), 32u);
  for (const auto& v : a) EXPECT_NEAR(std::hypot(v[0], v[1], v[2]), 1.0, 1e-14);
  EXPECT_EQ(a[0], (std::vector<double>{1.0, 0.0, 0.0}));
  const auto one = directions(1, 32, 5);
  EXPECT_EQ(one.size(), 2u);
}

#include <gtest/gtest.h>

#include <cmath>

#include "analysis.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "oracles.hpp"
#include "scenario_io.hpp"

using namespace hkcs;

namespace {

// Serves a fixed state for every delayed lookup.
struct FixedAccessor : DelayedAccessor {
  std::vector<double> x;
  std::vector<double> v;
  int dim = 1;
  void lookup(int j, double, std::span<double> xo, std::span<double> vo) override {
    std::copy_n(x.begin() + j * dim, dim, xo.begin());
    if (!vo.empty()) std::copy_n(v.begin() + j * dim, dim, vo.begin());
  }
};

Scenario two_agents(double k, ModelOrder order = ModelOrder::First) {
  Scenario s;
  s.order = order;
  s.influence = InfluenceFunction::constant(k);
  s.delays.assign(4, DelaySpec::constant(0.0, 0.0));
  s.weights.assign(4, WeightSchedule::constant(1.0));
  s.positions = {History::constant({0.0}, 0.0), History::constant({1.0}, 0.0)};
  if (order == ModelOrder::Second) s.velocities = {History::constant({1.0}, 0.0), History::constant({-1.0}, 0.0)};
  return s;
}

std::string with_histories(double shift) {
  return R"({"schema_version": 1, "order": "first", "n_agents": 3, "dimension": 2,
    "topology": {"family": "ring"}, "tau_max": 0.4,
    "delay": {"default": {"kind": "sinusoid", "base": 0.2, "amplitude": 0.15, "omega": 2, "phase": 0.3}},
    "weights": {"default": {"kind": "blink", "on": 0.7, "period": 1}},
    "influence": {"family": "radial_rational", "k0": 1, "beta": 1},
    "histories": {"kind": "explicit", "agents": [
      {"position": {"kind": "linear", "start": [)" +
         std::to_string(0.0 + shift) + ", " + std::to_string(1.0 - shift) + "], \"end\": [" +
         std::to_string(0.5 + shift) + ", " + std::to_string(1.0 - shift) + R"(]}},
      {"position": {"kind": "constant", "point": [)" +
         std::to_string(2.0 + shift) + ", " + std::to_string(0.0 - shift) + R"(]}},
      {"position": {"kind": "constant", "point": [)" +
         std::to_string(-1.0 + shift) + ", " + std::to_string(0.5 - shift) + R"(]}}]},
    "integrator": {"step": 0.01, "horizon": 6}})";
}

}  // namespace

TEST(History, Evaluation) {
  const History lin = History::linear({0.0, 0.0}, {1.0, 0.0}, 1.0);
  EXPECT_EQ(lin.at(-1.0), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(lin.at(-0.25), (std::vector<double>{0.75, 0.0}));
  const History smp = History::sampled({-2.0, -1.0, 0.0}, {{0.0}, {2.0}, {1.0}}, 2.0);
  EXPECT_DOUBLE_EQ(smp.at(-1.5)[0], 1.0);
  EXPECT_DOUBLE_EQ(smp.at(-0.5)[0], 1.5);
  EXPECT_THROW(smp.at(0.5), Error);
  EXPECT_THROW(History::sampled({-1.0, 0.0}, {{0.0}, {1.0}}, 2.0), Error);
}

TEST(Rhs, CoincidentAgentsDoNotMove) {
  Scenario s = two_agents(1.0);
  FixedAccessor acc;
  const std::vector<double> alpha{0, 1, 1, 0};
  const std::vector<double> state{0.3, 0.3};
  std::vector<double> out(2, 9.0);
  rhs_first_order(s, 0.0, alpha, state, acc, out);
  EXPECT_EQ(out, (std::vector<double>{0.0, 0.0}));
}

TEST(Rhs, TwoAgentSubstitution) {
  const double K = 0.7;
  Scenario s = two_agents(K);
  FixedAccessor acc;
  const std::vector<double> alpha{0, 1, 1, 0};
  const std::vector<double> state{0.2, 1.5};
  std::vector<double> out(2);
  rhs_first_order(s, 0.0, alpha, state, acc, out);
  EXPECT_DOUBLE_EQ(out[0], K * (1.5 - 0.2));
  EXPECT_DOUBLE_EQ(out[1], K * (0.2 - 1.5));
}

TEST(Rhs, CommunicationFailureFreezes) {
  Scenario s = two_agents(1.0);
  FixedAccessor acc;
  const std::vector<double> alpha(4, 0.0);
  std::vector<double> out(2, 9.0);
  rhs_first_order(s, 0.0, alpha, std::vector<double>{0.0, 1.0}, acc, out);
  EXPECT_EQ(out, (std::vector<double>{0.0, 0.0}));
}

TEST(Rhs, SecondOrderEqualVelocities) {
  Scenario s = two_agents(1.0, ModelOrder::Second);
  FixedAccessor acc;
  const std::vector<double> alpha{0, 1, 1, 0};
  std::vector<double> out(4);
  rhs_second_order(s, 0.0, alpha, std::vector<double>{0.0, 1.0, 0.4, 0.4}, acc, out);
  EXPECT_EQ(out, (std::vector<double>{0.4, 0.4, 0.0, 0.0}));
}

TEST(Rhs, SecondOrderUsesDelayedState) {
  Scenario s = two_agents(1.0, ModelOrder::Second);
  s.tau = 1.0;
  s.delays.assign(4, DelaySpec::constant(1.0, 1.0));
  FixedAccessor acc;
  acc.x = {5.0, 5.0};
  acc.v = {2.0, -3.0};
  const std::vector<double> alpha{0, 1, 1, 0};
  std::vector<double> out(4);
  rhs_second_order(s, 3.0, alpha, std::vector<double>{5.0, 5.0, 0.0, 0.0}, acc, out);
  EXPECT_DOUBLE_EQ(out[2], -3.0);
  EXPECT_DOUBLE_EQ(out[3], 2.0);
}

TEST(Rhs, OnlyPresentArcsContribute) {
  Scenario s;
  s.graph = Digraph::from_matrix({{0, 1, 0}, {0, 0, 0}, {0, 0, 0}});
  s.influence = InfluenceFunction::constant(1.0);
  s.delays.assign(9, DelaySpec::constant(0.0, 0.0));
  s.weights.assign(9, WeightSchedule::constant(1.0));
  FixedAccessor acc;
  const std::vector<double> alpha(9, 1.0);
  std::vector<double> out(3);
  rhs_first_order(s, 0.0, alpha, std::vector<double>{0.0, 1.0, 4.0}, acc, out);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.0);
  EXPECT_DOUBLE_EQ(out[2], 0.0);
}

TEST(Integrate, ConstantConsensusIsEquilibrium) {
  Scenario s = two_agents(1.0);
  s.tau = 0.3;
  s.delays.assign(4, DelaySpec::constant(0.3, 0.3));
  s.positions = {History::constant({0.25}, 0.3), History::constant({0.25}, 0.3)};
  const Trajectory traj = integrate(s);
  for (double t : {0.0, 1.3, 5.0, 10.0}) {
    EXPECT_NEAR(traj.position(0, t)[0], 0.25, 1e-12);
    EXPECT_NEAR(traj.position(1, t)[0], 0.25, 1e-12);
  }
}

TEST(Integrate, ClosedFormFirstOrder) {
  const Scenario s = build_scenario(parse_config(oracle::closed_form_first_order(1e-3)));
  const Trajectory traj = integrate(s);
  for (double t : {0.5, 1.0, 2.0}) EXPECT_NEAR(diameter(traj, t), std::exp(-2.0 * t), 1e-8);
}

TEST(Integrate, ClosedFormSecondOrderVelocityGap) {
  const double K = 0.8;
  Scenario s = two_agents(K, ModelOrder::Second);
  s.step = 1e-3;
  s.horizon = 3.0;
  const Trajectory traj = integrate(s);
  for (double t : {0.5, 1.0, 3.0}) {
    const double e = traj.velocity(0, t)[0] - traj.velocity(1, t)[0];
    EXPECT_NEAR(e, 2.0 * std::exp(-2.0 * K * t), 1e-9);
  }
}

TEST(Integrate, TranslationInvariance) {
  const Scenario a = build_scenario(parse_config(with_histories(0.0)));
  const Scenario b = build_scenario(parse_config(with_histories(0.75)));
  const Trajectory ta = integrate(a);
  const Trajectory tb = integrate(b);
  ASSERT_EQ(ta.nodes(), tb.nodes());
  for (double t : {0.0, 0.37, 1.0, 2.5, 6.0})
    for (int i = 0; i < 3; ++i) {
      const auto pa = ta.position(i, t);
      const auto pb = tb.position(i, t);
      EXPECT_NEAR(pb[0] - pa[0], 0.75, 1e-12);
      EXPECT_NEAR(pb[1] - pa[1], -0.75, 1e-12);
    }
}

TEST(Integrate, GalileanShiftWithoutDelay) {
  Scenario a = two_agents(1.0, ModelOrder::Second);
  a.influence = InfluenceFunction::radial_rational(1.0, 1.0);
  a.horizon = 4.0;
  Scenario b = a;
  const double c = 0.6;
  b.velocities = {History::constant({1.0 + c}, 0.0), History::constant({-1.0 + c}, 0.0)};
  const Trajectory ta = integrate(a);
  const Trajectory tb = integrate(b);
  for (double t : {0.5, 1.7, 4.0})
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(tb.position(i, t)[0] - ta.position(i, t)[0], c * t, 1e-10);
      EXPECT_NEAR(tb.velocity(i, t)[0] - ta.velocity(i, t)[0], c, 1e-10);
    }
}

TEST(Integrate, GridContainsSwitchesAndIntervalEndpoints) {
  Scenario s = two_agents(1.0);
  s.tau = 0.25;
  s.delays.assign(4, DelaySpec::constant(0.25, 0.25));
  s.positions = {History::constant({0.0}, 0.25), History::constant({1.0}, 0.25)};
  s.weights.assign(4, WeightSchedule::blink(0.333, 1.0));
  s.pe = PeDeclaration{1.0, 0.3};
  s.horizon = 5.0;
  const auto grid = integration_grid(s);
  const double P = *s.interval_length();
  EXPECT_DOUBLE_EQ(P, 1.5);
  auto has = [&](double t) {
    return std::any_of(grid.begin(), grid.end(), [&](double g) { return std::abs(g - t) < 1e-12; });
  };
  EXPECT_TRUE(has(0.333));
  EXPECT_TRUE(has(1.333));
  EXPECT_TRUE(has(P - 0.25));
  EXPECT_TRUE(has(2 * P));
  EXPECT_DOUBLE_EQ(grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(grid.back(), 5.0);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_GT(grid[k], grid[k - 1]);
}

TEST(Integrate, HistoryServesNegativeTimes) {
  Scenario s = two_agents(1.0);
  s.tau = 1.0;
  s.delays.assign(4, DelaySpec::constant(1.0, 1.0));
  s.positions = {History::linear({-1.0}, {0.0}, 1.0), History::constant({1.0}, 1.0)};
  const Trajectory traj = integrate(s);
  EXPECT_DOUBLE_EQ(traj.position(0, -0.5)[0], -0.5);
  EXPECT_THROW(traj.position(0, -1.5), Error);
  EXPECT_THROW(traj.position(0, s.horizon + 1.0), Error);
  EXPECT_THROW(traj.velocity(0, 1.0), Error);
}

TEST(Integrate, FourthOrderConvergence) {
  auto err = [](double h) {
    const Scenario s = build_scenario(parse_config(oracle::closed_form_first_order(h)));
    const Trajectory traj = integrate(s);
    double e = 0.0;
    for (double t : {0.5, 1.0, 2.0}) e = std::max(e, std::abs(diameter(traj, t) - std::exp(-2.0 * t)));
    return e;
  };
  const double r = err(0.04) / err(0.02);
  EXPECT_GT(r, 12.0);
  EXPECT_LT(r, 20.0);
}

TEST(Integrate, RebuildReproducesStates) {
  const Scenario s = build_scenario(parse_config(with_histories(0.0)));
  const Trajectory traj = integrate(s);
  std::vector<double> states;
  for (std::size_t k = 0; k < traj.nodes().size(); ++k) {
    const auto st = traj.node_state(k);
    states.insert(states.end(), st.begin(), st.end());
  }
  const Trajectory again = rebuild(s, traj.nodes(), states);
  for (double t : {0.123, 2.5, 5.99}) EXPECT_NEAR(again.position(1, t)[0], traj.position(1, t)[0], 1e-12);
  EXPECT_THROW(rebuild(s, {0.5, 1.0}, std::vector<double>(12, 0.0)), Error);
}

TEST(Scenario, ValidateRejectsInconsistency) {
  Scenario s = two_agents(1.0);
  s.delays.assign(4, DelaySpec::constant(0.5, 0.5));
  EXPECT_THROW(s.validate(), Error);
  Scenario t = two_agents(1.0);
  t.weights.assign(4, WeightSchedule::piecewise({0.0, 1.0}, {1.0}, false));
  EXPECT_THROW(t.validate(), Error);
  Scenario u = two_agents(1.0);
  u.step = 0.0;
  EXPECT_THROW(u.validate(), Error);
}

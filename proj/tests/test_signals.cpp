#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "errors.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "signals.hpp"
#include "topology.hpp"

using namespace hkcs;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST(Delay, ConstantAndSinusoid) {
  EXPECT_DOUBLE_EQ(DelaySpec::constant(0.5, 1.0)(3.0), 0.5);
  EXPECT_NEAR(DelaySpec::sinusoid(0.3, 0.2, 1.0, 0.0, 0.5)(std::numbers::pi / 2), 0.5, 1e-15);
}

TEST(Delay, StaysWithinBounds) {
  const DelaySpec d = DelaySpec::sinusoid(0.4, 0.3, 2.7, 1.1, 0.7);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1e4);
  for (int k = 0; k < 1000000; ++k) {
    const double v = d(u(rng));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 0.7);
  }
}

TEST(Delay, RejectsOutOfRange) {
  EXPECT_EQ(kind_of([] { DelaySpec::constant(1.5, 1.0); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { DelaySpec::sinusoid(0.3, 0.4, 1.0, 0.0, 1.0); }), ErrorKind::Config);
}

TEST(Weights, Integrals) {
  EXPECT_DOUBLE_EQ(WeightSchedule::constant(1.0).integrate(2.0, 5.0), 3.0);
  const WeightSchedule blink = WeightSchedule::blink(1.0, 2.0);
  EXPECT_DOUBLE_EQ(blink.integrate(0.0, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(blink.integrate(1.7, 1.7), 0.0);
  EXPECT_DOUBLE_EQ(blink.value(0.5), 1.0);
  EXPECT_DOUBLE_EQ(blink.value(1.5), 0.0);
}

TEST(Weights, IntegralMatchesSegmentSum) {
  const WeightSchedule w = WeightSchedule::piecewise({0.0, 0.3, 1.1, 2.0}, {0.5, 0.0, 0.8}, true);
  const double a = 0.17;
  const double b = 5.43;
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) sum += w.value(a + (k + 0.5) * (b - a) / n) * (b - a) / n;
  EXPECT_NEAR(w.integrate(a, b), sum, 1e-4);
}

TEST(Weights, SwitchTimes) {
  const auto s = WeightSchedule::blink(1.0, 2.0).switch_times(0.0, 5.0);
  const std::vector<double> expected{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(s, expected);
}

TEST(Weights, TerminalValueAndDefinedUntil) {
  const WeightSchedule w = WeightSchedule::piecewise({0.0, 1.0, 2.0}, {1.0, 0.0}, false, 0.5);
  EXPECT_DOUBLE_EQ(w.value(10.0), 0.5);
  EXPECT_DOUBLE_EQ(w.integrate(0.0, 4.0), 2.0);
  const WeightSchedule finite = WeightSchedule::piecewise({0.0, 1.0, 2.0}, {1.0, 0.0}, false);
  EXPECT_DOUBLE_EQ(finite.defined_until(), 2.0);
}

TEST(Pe, Margins) {
  EXPECT_DOUBLE_EQ(pe_margin(WeightSchedule::constant(1.0), 2.0, 10.0), 2.0);
  const WeightSchedule blink = WeightSchedule::blink(1.0, 2.0);
  EXPECT_NEAR(pe_margin(blink, 2.0, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(pe_margin(blink, 2.0, 10.0), oracle::dense_pe_margin(blink, 2.0), 1e-9);
  const WeightSchedule dark = WeightSchedule::piecewise({0.0, 5.0, 6.0, 20.0}, {1.0, 0.0, 1.0}, false);
  EXPECT_NEAR(pe_margin(dark, 1.0, 20.0), 0.0, 1e-12);
}

TEST(Pe, MatchesDenseGridOnRandomSchedules) {
  for (int k = 0; k < 100; ++k) {
    const PeriodicSample p = random_periodic_schedule(500 + k);
    EXPECT_NEAR(pe_margin(p.schedule, p.T, 5.0 * p.schedule.period()), oracle::dense_pe_margin(p.schedule, p.T),
                1e-9);
  }
}

TEST(Pe, VerifyWitnessAndViolation) {
  const Digraph g = Digraph::complete(3);
  std::vector<WeightSchedule> on(9, WeightSchedule::constant(1.0));
  const PeWitness w = verify_pe(g, on, 1.0, 1.0, 10.0);
  EXPECT_DOUBLE_EQ(w.tightest_margin, 1.0);
  EXPECT_TRUE(std::isinf(w.verified_horizon));

  on[0 * 3 + 2] = WeightSchedule::constant(0.0);
  try {
    verify_pe(g, on, 1.0, 1.0, 10.0);
    FAIL() << "expected a violation";
  } catch (const PeViolationError& e) {
    EXPECT_EQ(e.i(), 0);
    EXPECT_EQ(e.j(), 2);
    EXPECT_EQ(e.kind(), ErrorKind::PeViolation);
  }
}

TEST(Pe, GeneratedTelegraphSchedulesPass) {
  // Duty at least 0.4 on each window of length T = 5 gives margin >= 2.
  const Digraph g = Digraph::ring(4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<WeightSchedule> schedules(16, WeightSchedule::constant(1.0));
  for (auto& s : schedules) {
    const double on = 0.4 + 0.5 * u(rng);
    s = WeightSchedule::piecewise({0.0, on * 5.0, 5.0}, {1.0, 0.0}, true);
  }
  const PeWitness w = verify_pe(g, schedules, 5.0, 2.0, 50.0);
  EXPECT_GE(w.tightest_margin, 2.0);
}

TEST(Influence, SupNorm) {
  EXPECT_DOUBLE_EQ(InfluenceFunction::constant(2.5).sup_norm(), 2.5);
  EXPECT_DOUBLE_EQ(InfluenceFunction::radial_rational(1.0, 2.0).sup_norm(), 1.0);
  const InfluenceFunction t = InfluenceFunction::table({0.0, 1.0, 2.0, 3.0}, {0.3, 0.9, 0.2, 0.4});
  double dense = 0.0;
  for (int k = 0; k <= 30000; ++k) dense = std::max(dense, t(k * 1e-4));
  EXPECT_DOUBLE_EQ(t.sup_norm(), dense);
}

TEST(Influence, Floor) {
  EXPECT_DOUBLE_EQ(InfluenceFunction::constant(0.7).floor(3.0), 0.7);
  EXPECT_NEAR(InfluenceFunction::radial_rational(1.0, 2.0).floor(1.0), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(InfluenceFunction::radial_rational(0.8, 2.0).floor(0.0), 0.8);
  const InfluenceFunction touching = InfluenceFunction::table({0.0, 1.0}, {1.0, 0.0});
  EXPECT_EQ(kind_of([&] { touching.floor(1.0); }), ErrorKind::NonPositiveFloor);
}

TEST(Influence, RunningMin) {
  const InfluenceFunction r = InfluenceFunction::radial_rational(1.0, 1.0);
  EXPECT_DOUBLE_EQ(r.running_min(3.0), r(3.0));
  EXPECT_DOUBLE_EQ(InfluenceFunction::constant(0.4).running_min(100.0), 0.4);
  const InfluenceFunction dip = InfluenceFunction::table({0.0, 1.0, 2.0, 3.0}, {1.0, 0.2, 0.8, 0.6});
  for (double R : {0.5, 1.0, 1.5, 2.5, 4.0}) {
    double scan = INFINITY;
    for (int k = 0; k <= 10000; ++k) scan = std::min(scan, dip(R * k / 10000.0));
    for (double knot : dip.radii())
      if (knot <= R) scan = std::min(scan, dip(knot));
    EXPECT_NEAR(dip.running_min(R), scan, 1e-12) << "R = " << R;
  }
  EXPECT_DOUBLE_EQ(dip.running_min(2.5), 0.2);
}

TEST(Influence, DivergenceClass) {
  EXPECT_EQ(InfluenceFunction::constant(1.0).divergence_class(4), DivergenceClass::Diverges);
  EXPECT_EQ(InfluenceFunction::radial_rational(1.0, 0.5).divergence_class(1), DivergenceClass::Diverges);
  EXPECT_EQ(InfluenceFunction::radial_rational(1.0, 0.5).divergence_class(3), DivergenceClass::Converges);
  EXPECT_EQ(InfluenceFunction::radial_exponential(1.0, 1.0).divergence_class(1), DivergenceClass::Converges);
}

TEST(Influence, PairEvaluationUsesDistance) {
  const InfluenceFunction r = InfluenceFunction::radial_exponential(2.0, 0.5);
  const std::vector<double> y{0.0, 0.0};
  const std::vector<double> z{3.0, 4.0};
  EXPECT_NEAR(r(y, z), 2.0 * std::exp(-0.5 * 5.0), 1e-15);
}

#include "generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "errors.hpp"

namespace hkcs {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Round to a few decimals so generated documents stay readable.
double tidy(double x, double quantum = 1e-3) { return std::round(x / quantum) * quantum; }

std::vector<double> random_point(Rng& rng, int dim, double lo, double hi) {
  std::vector<double> p(dim);
  for (double& x : p) x = tidy(uniform(rng, lo, hi));
  return p;
}

History random_history(Rng& rng, int dim, double tau, double lo, double hi) {
  const int kind = tau > 0.0 ? uniform_int(rng, 0, 2) : 0;
  if (kind == 0) return History::constant(random_point(rng, dim, lo, hi), tau);
  if (kind == 1) return History::linear(random_point(rng, dim, lo, hi), random_point(rng, dim, lo, hi), tau);
  const int inner = uniform_int(rng, 1, 3);
  std::vector<double> times{-tau};
  for (int k = 1; k <= inner; ++k) times.push_back(-tau + tau * k / (inner + 1));
  times.push_back(0.0);
  std::vector<std::vector<double>> values;
  for (std::size_t k = 0; k < times.size(); ++k) values.push_back(random_point(rng, dim, lo, hi));
  return History::sampled(times, values, tau);
}

// Blink with period T / m, or a telegraph pattern with period T whose
// segments are either off or partially on. Every window of length T carries
// at least min_duty * T.
WeightSchedule random_pe_schedule(Rng& rng, double T, double min_duty) {
  if (coin(rng, 0.5)) {
    const int m = uniform_int(rng, 1, 2);
    const double period = T / m;
    const double on = tidy(uniform(rng, min_duty, 0.95) * period, 1e-4);
    return WeightSchedule::blink(std::max(on, 1e-3), period, tidy(uniform(rng, 0.0, period), 1e-4));
  }
  while (true) {
    const int segments = uniform_int(rng, 2, 4);
    std::vector<double> cuts;
    for (int k = 1; k < segments; ++k) cuts.push_back(tidy(uniform(rng, 0.05, 0.95) * T, 1e-4));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> b{0.0};
    for (double c : cuts)
      if (c > b.back()) b.push_back(c);
    if (b.back() >= T) b.pop_back();
    b.push_back(T);
    std::vector<double> v;
    double mass = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
      v.push_back(coin(rng, 0.7) ? tidy(uniform(rng, std::max(min_duty, 0.3), 1.0), 1e-3) : 0.0);
      mass += v.back() * (b[k + 1] - b[k]);
    }
    // One period is one window, so its mass is the PE margin.
    if (mass >= min_duty * T) return WeightSchedule::piecewise(b, v, true);
  }
}

struct Skeleton {
  ScenarioConfig config;
  Digraph graph = Digraph::complete(2);
};

// Digraph, delays, schedules and PE declaration shared by both generators.
Skeleton random_skeleton(Rng& rng, ModelOrder order, int max_agents, double min_duty) {
  Skeleton sk;
  ScenarioConfig& c = sk.config;
  c.order = order;
  c.agents = uniform_int(rng, 2, max_agents);
  c.dim = uniform_int(rng, 1, 3);
  c.seed = rng();
  c.topology.family = TopologyConfig::Family::Random;
  c.topology.seed = rng();
  c.topology.edge_prob = tidy(uniform(rng, 0.2, 0.8), 0.01);
  sk.graph = Digraph::random(c.agents, c.topology.seed, c.topology.edge_prob);

  c.tau_max = coin(rng, 0.25) ? 0.0 : tidy(uniform(rng, 0.1, 1.0), 0.01);
  const double tau = c.tau_max;
  c.delay_default = DelaySpec::constant(tidy(uniform(rng, 0.0, tau), 1e-3), tau);
  for (int i = 0; i < c.agents; ++i)
    for (int j = 0; j < c.agents; ++j) {
      if (i == j || tau == 0.0 || !coin(rng, 0.4)) continue;
      const double amp = tidy(uniform(rng, 0.0, tau / 2), 1e-3);
      double base = std::clamp(tidy(uniform(rng, amp, tau - amp), 1e-3), amp, tau - amp);
      while (base + amp > tau) base = std::nextafter(base, 0.0);
      const double omega = tidy(uniform(rng, 0.5, 6.0), 1e-2);
      const double phase = tidy(uniform(rng, 0.0, 6.283), 1e-3);
      c.delay_overrides.push_back({i, j, DelaySpec::sinusoid(base, amp, omega, phase, tau)});
    }

  const double T = tidy(uniform(rng, 0.5, 2.0), 0.01);
  c.weight_default = random_pe_schedule(rng, T, min_duty);
  for (int i = 0; i < c.agents; ++i)
    for (int j = 0; j < c.agents; ++j)
      if (sk.graph.adjacent(i, j) && coin(rng, 0.5)) c.weight_overrides.push_back({i, j, random_pe_schedule(rng, T, min_duty)});
  c.pe = PeDeclaration{T, 1.0};
  return sk;
}

void finish(ScenarioConfig& c, double horizon_intervals, double min_horizon) {
  c.step = default_step(c.tau_max);
  Scenario s = build_scenario(c);
  c.pe->alpha_tilde = certified_alpha(s, c.pe->T);
  s.pe = c.pe;
  const double P = *s.interval_length();
  c.horizon = std::ceil(std::max(horizon_intervals * P, min_horizon) * 100.0) / 100.0;
}

}  // namespace

double certified_alpha(const Scenario& s, double T) {
  double alpha = std::numeric_limits<double>::infinity();
  const int n = s.agents();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (s.graph.adjacent(i, j)) alpha = std::min(alpha, pe_margin(s.weight(i, j), T, std::max(s.horizon, T)));
  const double K = s.influence.sup_norm();
  if (K > 0.0) alpha = std::min(alpha, 1.0 / K);
  return alpha;
}

ScenarioConfig random_first_order_config(std::uint64_t seed) {
  Rng rng(seed);
  Skeleton sk = random_skeleton(rng, ModelOrder::First, 6, 0.2);
  ScenarioConfig& c = sk.config;
  c.influence = InfluenceFunction::radial_rational(tidy(uniform(rng, 0.3, 1.0), 0.01), tidy(uniform(rng, 0.0, 2.0), 0.01));
  c.histories.kind = HistoryConfig::Kind::Explicit;
  for (int i = 0; i < c.agents; ++i) c.histories.positions.push_back(random_history(rng, c.dim, c.tau_max, -1.0, 1.0));
  finish(c, 3.0, 0.0);
  return c;
}

ScenarioConfig random_second_order_config(std::uint64_t seed) {
  Rng rng(seed);
  Skeleton sk = random_skeleton(rng, ModelOrder::Second, 6, 0.4);
  ScenarioConfig& c = sk.config;
  const int gamma = depth(sk.graph);
  c.influence = InfluenceFunction::radial_rational(tidy(uniform(rng, 0.6, 1.0), 0.01),
                                                   std::floor(uniform(rng, 0.0, 1.0 / gamma) * 100.0) / 100.0);
  c.histories.kind = HistoryConfig::Kind::Explicit;
  for (int i = 0; i < c.agents; ++i) {
    c.histories.positions.push_back(random_history(rng, c.dim, c.tau_max, -1.0, 1.0));
    c.histories.velocities.push_back(random_history(rng, c.dim, c.tau_max, -0.5, 0.5));
  }
  finish(c, 8.0, 300.0);
  return c;
}

ScenarioConfig random_config(std::uint64_t seed) {
  Rng rng(seed);
  ScenarioConfig c;
  c.order = coin(rng, 0.5) ? ModelOrder::First : ModelOrder::Second;
  c.agents = uniform_int(rng, 2, 7);
  c.dim = uniform_int(rng, 1, 4);
  c.seed = rng();
  switch (uniform_int(rng, 0, 3)) {
    case 0: c.topology.family = TopologyConfig::Family::Complete; break;
    case 1: c.topology.family = TopologyConfig::Family::Ring; break;
    case 2:
      c.topology.family = TopologyConfig::Family::Random;
      c.topology.seed = rng();
      c.topology.edge_prob = uniform(rng, 0.05, 1.0);
      break;
    default: {
      c.topology.family = TopologyConfig::Family::Matrix;
      c.topology.chi.assign(c.agents, std::vector<int>(c.agents, 0));
      for (int i = 0; i < c.agents; ++i)
        for (int j = 0; j < c.agents; ++j) c.topology.chi[i][j] = i != j && coin(rng, 0.5) ? 1 : 0;
    }
  }
  const Digraph g = [&] {
    switch (c.topology.family) {
      case TopologyConfig::Family::Complete: return Digraph::complete(c.agents);
      case TopologyConfig::Family::Ring: return Digraph::ring(c.agents);
      case TopologyConfig::Family::Random: return Digraph::random(c.agents, c.topology.seed, c.topology.edge_prob);
      case TopologyConfig::Family::Matrix: break;
    }
    return Digraph::from_matrix(c.topology.chi);
  }();

  c.tau_max = coin(rng, 0.3) ? 0.0 : uniform(rng, 0.01, 2.0);
  const double tau = c.tau_max;
  if (coin(rng, 0.5) || tau == 0.0) {
    c.delay_default = DelaySpec::constant(uniform(rng, 0.0, tau), tau);
  } else {
    const double amp = uniform(rng, 0.0, tau / 2);
    double base = uniform(rng, amp, tau - amp);
    while (base + amp > tau) base = std::nextafter(base, 0.0);
    c.delay_default = DelaySpec::sinusoid(base, amp, uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0), tau);
  }
  for (int k = uniform_int(rng, 0, 3); k > 0; --k) {
    const int i = uniform_int(rng, 0, c.agents - 1);
    const int j = (i + uniform_int(rng, 1, c.agents - 1)) % c.agents;
    c.delay_overrides.push_back({i, j, DelaySpec::constant(uniform(rng, 0.0, tau), tau)});
  }
  c.horizon = uniform(rng, 0.0, 20.0);
  auto schedule = [&]() {
    switch (uniform_int(rng, 0, 3)) {
      case 0: return WeightSchedule::constant(uniform(rng, 0.0, 1.0));
      case 1: return WeightSchedule::blink(uniform(rng, 0.0, 1.0), uniform(rng, 1.0, 3.0), uniform(rng, -2.0, 5.0));
      case 2: {
        std::vector<double> b{0.0}, v;
        for (int k = uniform_int(rng, 1, 5); k > 0; --k) {
          b.push_back(b.back() + uniform(rng, 0.01, 2.0));
          v.push_back(uniform(rng, 0.0, 1.0));
        }
        return WeightSchedule::piecewise(b, v, true);
      }
      default: {
        std::vector<double> b{0.0}, v;
        for (int k = uniform_int(rng, 1, 5); k > 0; --k) {
          b.push_back(b.back() + uniform(rng, 0.01, 2.0));
          v.push_back(uniform(rng, 0.0, 1.0));
        }
        return WeightSchedule::piecewise(b, v, false, uniform(rng, 0.0, 1.0));
      }
    }
  };
  c.weight_default = schedule();
  for (int i = 0; i < c.agents; ++i)
    for (int j = 0; j < c.agents; ++j)
      if (g.adjacent(i, j) && coin(rng, 0.2)) c.weight_overrides.push_back({i, j, schedule()});
  if (coin(rng, 0.6)) c.pe = PeDeclaration{uniform(rng, 0.1, 3.0), uniform(rng, 0.01, 1.0)};
  switch (uniform_int(rng, 0, 3)) {
    case 0: c.influence = InfluenceFunction::constant(uniform(rng, 0.1, 2.0)); break;
    case 1: c.influence = InfluenceFunction::radial_rational(uniform(rng, 0.1, 2.0), uniform(rng, 0.0, 3.0)); break;
    case 2: c.influence = InfluenceFunction::radial_exponential(uniform(rng, 0.1, 2.0), uniform(rng, 0.0, 3.0)); break;
    default: {
      std::vector<double> r{0.0}, v{uniform(rng, 0.1, 1.0)};
      for (int k = uniform_int(rng, 0, 4); k > 0; --k) {
        r.push_back(r.back() + uniform(rng, 0.1, 2.0));
        v.push_back(uniform(rng, 0.0, 1.0));
      }
      c.influence = InfluenceFunction::table(r, v);
    }
  }
  if (coin(rng, 0.5)) {
    c.histories.kind = HistoryConfig::Kind::Explicit;
    for (int i = 0; i < c.agents; ++i) {
      c.histories.positions.push_back(random_history(rng, c.dim, tau, -3.0, 3.0));
      if (c.order == ModelOrder::Second) c.histories.velocities.push_back(random_history(rng, c.dim, tau, -1.0, 1.0));
    }
  } else {
    c.histories.kind = HistoryConfig::Kind::RandomBox;
    c.histories.low = uniform(rng, -5.0, 0.0);
    c.histories.high = uniform(rng, 0.0, 5.0);
    c.histories.velocity_low = uniform(rng, -2.0, 0.0);
    c.histories.velocity_high = uniform(rng, 0.0, 2.0);
    c.histories.shape = coin(rng, 0.5) ? HistoryConfig::Shape::Constant : HistoryConfig::Shape::Linear;
    c.histories.seed = rng();
  }
  c.step = coin(rng, 0.5) ? default_step(tau) : uniform(rng, 1e-3, 5e-2);
  c.analysis.directions = uniform_int(rng, 1, 64);
  if (coin(rng, 0.5)) c.analysis.n_max = uniform_int(rng, 0, 10);
  c.analysis.tolerance = uniform(rng, 0.0, 1e-3);
  c.analysis.lemma_tolerance = uniform(rng, 0.0, 1e-6);
  return c;
}

PeriodicSample random_periodic_schedule(std::uint64_t seed, int grid) {
  Rng rng(seed);
  const double period = uniform_int(rng, 1, 4);
  const double quantum = period / grid;
  const int segments = uniform_int(rng, 1, 8);
  std::vector<int> cuts;
  for (int k = 1; k < segments; ++k) cuts.push_back(uniform_int(rng, 1, grid - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> b{0.0};
  for (int c : cuts) b.push_back(c * quantum);
  b.push_back(period);
  std::vector<double> v;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) v.push_back(coin(rng, 0.3) ? 0.0 : uniform(rng, 0.0, 1.0));
  PeriodicSample out;
  out.schedule = WeightSchedule::piecewise(b, v, true);
  out.T = uniform_int(rng, 1, 2 * grid) * quantum;
  return out;
}

}  // namespace hkcs

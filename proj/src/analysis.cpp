#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "errors.hpp"

namespace hkcs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative growth allowed for sup d_X over the last quarter of the horizon.
constexpr double kStabilisation = 1e-3;
// Allowed shortfall of the fitted decay rate below the certified one.
constexpr double kRateSlack = 1e-3;

double norm(std::span<const double> a) {
  double sq = 0.0;
  for (double x : a) sq += x * x;
  return std::sqrt(sq);
}

double distance(const double* a, const double* b, int dim) {
  double sq = 0.0;
  for (int c = 0; c < dim; ++c) sq += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(sq);
}

double dot(const double* a, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) s += a[c] * v[c];
  return s;
}

// Diameter of the N agents' states in one block.
double block_diameter(std::span<const double> block, int agents, int dim) {
  double best = 0.0;
  for (int i = 0; i < agents; ++i)
    for (int j = i + 1; j < agents; ++j)
      best = std::max(best, distance(block.data() + static_cast<std::size_t>(i) * dim,
                                     block.data() + static_cast<std::size_t>(j) * dim, dim));
  return best;
}

// Accumulates the worst margin of one check.
class Worst {
 public:
  void add(double margin) {
    if (std::isnan(margin)) {
      nan_ = true;
      return;
    }
    margin_ = std::min(margin_, margin);
    any_ = true;
  }
  bool any() const { return any_ || nan_; }
  double value() const { return nan_ ? kNaN : margin_; }

 private:
  double margin_ = kInf;
  bool any_ = false;
  bool nan_ = false;
};

CheckRecord make_record(std::string id, std::string description, const Worst& worst, double tolerance) {
  CheckRecord r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.tolerance = tolerance;
  if (!worst.any()) {
    r.margin = kNaN;
    r.status = CheckStatus::Skipped;
    r.note = "no samples";
    return r;
  }
  r.margin = worst.value();
  r.status = (!std::isnan(r.margin) && r.margin >= -tolerance) ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

CheckRecord skipped(std::string id, std::string description, double tolerance, std::string note) {
  CheckRecord r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.margin = kNaN;
  r.tolerance = tolerance;
  r.status = CheckStatus::Skipped;
  r.note = std::move(note);
  return r;
}

// Per-direction max and min over agents of the projection at every sample.
struct Projections {
  std::vector<std::vector<double>> max;  // [direction][sample]
  std::vector<std::vector<double>> min;
};

Projections project(const SampleTable& table, const std::vector<std::vector<double>>& dirs, bool velocity) {
  Projections p;
  p.max.assign(dirs.size(), std::vector<double>(table.size()));
  p.min.assign(dirs.size(), std::vector<double>(table.size()));
  for (std::size_t k = 0; k < table.size(); ++k) {
    for (std::size_t a = 0; a < dirs.size(); ++a) {
      double hi = -kInf;
      double lo = kInf;
      for (int i = 0; i < table.agents(); ++i) {
        const double q = dot((velocity ? table.v(k, i) : table.x(k, i)).data(), dirs[a]);
        hi = std::max(hi, q);
        lo = std::min(lo, q);
      }
      p.max[a][k] = hi;
      p.min[a][k] = lo;
    }
  }
  return p;
}

std::vector<double> suffix_max(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double run = -kInf;
  for (std::size_t k = v.size(); k-- > 0;) out[k] = run = std::max(run, v[k]);
  return out;
}

std::vector<double> suffix_min(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double run = kInf;
  for (std::size_t k = v.size(); k-- > 0;) out[k] = run = std::min(run, v[k]);
  return out;
}

int last_interval(double horizon, double period, const AnalysisSettings& settings) {
  const double eps = 1e-9 * std::max(1.0, horizon);
  int n = static_cast<int>(std::floor((horizon + eps) / period));
  if (settings.n_max) n = std::min(n, *settings.n_max);
  return std::max(n, 0);
}

std::pair<double, double> interval_bounds(int n, double period, double tau) {
  if (n == 0) return {-tau, 0.0};
  return {std::max(-tau, n * period - tau), n * period};
}

void require_pe(const Scenario& s) {
  if (!s.pe) throw Error(ErrorKind::Hypothesis, "a PE declaration (T, alpha_tilde) is required");
  if (!strongly_connected(s.graph)) throw Error(ErrorKind::Hypothesis, "the digraph must be strongly connected");
}

// Delayed position x_j(t - tau_ij(t)) of a node sample.
void delayed_position(const Scenario& s, const SampleTable& table, const Trajectory& traj, std::size_t k, int i,
                      int j, std::span<double> out) {
  const double t = table.time(k);
  const double lag = s.delay(i, j)(t);
  if (lag == 0.0) {
    auto xj = table.x(k, j);
    std::copy(xj.begin(), xj.end(), out.begin());
  } else {
    traj.position(j, t - lag, out);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Diameters

double point_diameter(std::span<const double> points, std::size_t count, int dim) {
  if (count < 2) return 0.0;
  if (dim == 1) {
    auto [lo, hi] = std::minmax_element(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(count));
    return *hi - *lo;
  }
  // Sorting by distance to the centroid lets the triangle inequality prune
  // pairs that cannot beat the current best.
  std::vector<double> centroid(dim, 0.0);
  for (std::size_t p = 0; p < count; ++p)
    for (int c = 0; c < dim; ++c) centroid[c] += points[p * dim + c];
  for (double& c : centroid) c /= static_cast<double>(count);
  std::vector<std::pair<double, std::size_t>> order(count);
  for (std::size_t p = 0; p < count; ++p) order[p] = {distance(points.data() + p * dim, centroid.data(), dim), p};
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = 0.0;
  for (std::size_t a = 0; a < count; ++a) {
    if (order[a].first + order[0].first <= best) break;
    const double* pa = points.data() + order[a].second * dim;
    for (std::size_t b = a + 1; b < count; ++b) {
      if (order[a].first + order[b].first <= best) break;
      best = std::max(best, distance(pa, points.data() + order[b].second * dim, dim));
    }
  }
  return best;
}

double diameter(const Trajectory& traj, double t) {
  const int n = traj.agents();
  const int d = traj.dim();
  std::vector<double> block(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) traj.position(i, t, std::span<double>(block.data() + static_cast<std::size_t>(i) * d, d));
  return block_diameter(block, n, d);
}

Diameters diameters_xv(const Trajectory& traj, double t) {
  const int n = traj.agents();
  const int d = traj.dim();
  std::vector<double> xs(static_cast<std::size_t>(n) * d), vs(xs.size());
  for (int i = 0; i < n; ++i) {
    traj.position(i, t, std::span<double>(xs.data() + static_cast<std::size_t>(i) * d, d));
    traj.velocity(i, t, std::span<double>(vs.data() + static_cast<std::size_t>(i) * d, d));
  }
  return {block_diameter(xs, n, d), block_diameter(vs, n, d)};
}

// ---------------------------------------------------------------------------
// Base constants and directions

BaseConstants base_constants(const Scenario& s) {
  BaseConstants b;
  for (const auto& h : s.positions) {
    const auto knots = h.knots();
    std::vector<std::vector<double>> pts;
    for (double t : knots) pts.push_back(h.at(t));
    for (std::size_t a = 0; a < pts.size(); ++a) {
      b.c0 = std::max(b.c0, norm(pts[a]));
      for (std::size_t c = a + 1; c < pts.size(); ++c)
        b.m0x = std::max(b.m0x, distance(pts[a].data(), pts[c].data(), h.dimension()));
    }
  }
  if (s.order == ModelOrder::Second) {
    for (const auto& h : s.velocities)
      for (double t : h.knots()) b.c0v = std::max(b.c0v, norm(h.at(t)));
  }
  return b;
}

std::vector<std::vector<double>> directions(int dim, int count, std::uint64_t seed) {
  if (dim < 1 || count < 1) throw Error(ErrorKind::Config, "directions need dim >= 1 and count >= 1");
  if (dim == 1) return {{1.0}, {-1.0}};
  std::vector<std::vector<double>> out;
  if (dim <= 3) {
    for (int c = 0; c < dim && static_cast<int>(out.size()) < count; ++c) {
      std::vector<double> e(dim, 0.0);
      e[c] = 1.0;
      out.push_back(e);
      if (static_cast<int>(out.size()) < count) {
        e[c] = -1.0;
        out.push_back(e);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(out.size()) < count) {
    std::vector<double> v(dim);
    for (double& x : v) x = gauss(rng);
    const double len = norm(v);
    if (len < 1e-12) continue;
    for (double& x : v) x /= len;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample table

SampleTable::SampleTable(const Trajectory& traj)
    : times_(traj.all_sample_times()), agents_(traj.agents()), dim_(traj.dim()) {
  const std::size_t block = static_cast<std::size_t>(agents_) * dim_;
  const bool second = traj.order() == ModelOrder::Second;
  first_node_ = traj.history_grid().size();
  eps_ = 1e-9 * std::max(1.0, std::abs(traj.horizon()));
  x_.resize(times_.size() * block);
  if (second) v_.resize(times_.size() * block);
  for (std::size_t k = 0; k < first_node_; ++k) {
    for (int i = 0; i < agents_; ++i) {
      traj.position(i, times_[k], std::span<double>(x_.data() + k * block + static_cast<std::size_t>(i) * dim_, dim_));
      if (second)
        traj.velocity(i, times_[k], std::span<double>(v_.data() + k * block + static_cast<std::size_t>(i) * dim_, dim_));
    }
  }
  for (std::size_t k = first_node_; k < times_.size(); ++k) {
    auto state = traj.node_state(k - first_node_);
    std::copy_n(state.begin(), block, x_.begin() + static_cast<std::ptrdiff_t>(k * block));
    if (second) std::copy_n(state.begin() + static_cast<std::ptrdiff_t>(block), block, v_.begin() + static_cast<std::ptrdiff_t>(k * block));
  }
}

std::span<const double> SampleTable::x(std::size_t k) const {
  const std::size_t block = static_cast<std::size_t>(agents_) * dim_;
  return {x_.data() + k * block, block};
}

std::span<const double> SampleTable::v(std::size_t k) const {
  const std::size_t block = static_cast<std::size_t>(agents_) * dim_;
  return {v_.data() + k * block, block};
}

std::span<const double> SampleTable::x(std::size_t k, int i) const {
  return x(k).subspan(static_cast<std::size_t>(i) * dim_, dim_);
}

std::span<const double> SampleTable::v(std::size_t k, int i) const {
  return v(k).subspan(static_cast<std::size_t>(i) * dim_, dim_);
}

std::pair<std::size_t, std::size_t> SampleTable::range(double a, double b) const {
  auto lo = std::lower_bound(times_.begin(), times_.end(), a - eps_);
  auto hi = std::upper_bound(times_.begin(), times_.end(), b + eps_);
  return {static_cast<std::size_t>(lo - times_.begin()), static_cast<std::size_t>(hi - times_.begin())};
}

// ---------------------------------------------------------------------------
// Interval quantities

IntervalQuantities interval_quantities(const Trajectory& traj, int n, double period,
                                       const std::vector<std::vector<double>>& dirs) {
  SampleTable table(traj);
  return interval_quantities(table, traj, n, period, dirs);
}

IntervalQuantities interval_quantities(const SampleTable& table, const Trajectory& traj, int n, double period,
                                       const std::vector<std::vector<double>>& dirs, bool with_position_diameter) {
  if (n < 0 || !(period > 0.0)) throw Error(ErrorKind::OutOfRange, "interval index must be >= 0 and period > 0");
  const auto [start, end] = interval_bounds(n, period, traj.tau());
  if (end > traj.horizon() + 1e-9 * std::max(1.0, traj.horizon()))
    throw Error(ErrorKind::OutOfRange, "interval I_" + std::to_string(n) + " extends past the horizon");
  IntervalQuantities q;
  q.n = n;
  q.start = start;
  q.end = end;

  const int agents = table.agents();
  const int d = table.dim();
  const bool second = traj.order() == ModelOrder::Second;
  const auto [lo, hi] = table.range(start, end);

  // Points in the interval, with the exact endpoints appended. Consecutive
  // repeats of the same agent's state are dropped before the pairwise search.
  auto gather = [&](bool velocity) {
    std::vector<double> pts;
    std::vector<const double*> last(agents, nullptr);
    auto push = [&](int i, const double* p) {
      if (last[i] && std::equal(p, p + d, last[i])) return;
      pts.insert(pts.end(), p, p + d);
      last[i] = pts.data() + pts.size() - d;
    };
    std::vector<double> buf(d);
    std::vector<std::vector<double>> ends;
    for (double t : {start, end})
      for (int i = 0; i < agents; ++i) {
        if (velocity) traj.velocity(i, t, buf); else traj.position(i, t, buf);
        ends.push_back(buf);
      }
    // Reserved up front so the pointers kept in `last` stay valid.
    pts.reserve((hi - lo + 2) * agents * d);
    for (std::size_t k = lo; k < hi; ++k)
      for (int i = 0; i < agents; ++i) push(i, (velocity ? table.v(k, i) : table.x(k, i)).data());
    for (const auto& e : ends) pts.insert(pts.end(), e.begin(), e.end());
    return pts;
  };

  auto extremes = [&](const std::vector<double>& pts, std::vector<double>& mn, std::vector<double>& mx,
                      std::vector<double>& mn_t, std::vector<double>& mx_t, bool velocity) {
    const std::size_t count = pts.size() / d;
    mn.assign(dirs.size(), kInf);
    mx.assign(dirs.size(), -kInf);
    mn_t.assign(dirs.size(), kInf);
    mx_t.assign(dirs.size(), -kInf);
    std::vector<double> buf(d);
    for (std::size_t a = 0; a < dirs.size(); ++a) {
      for (std::size_t p = 0; p < count; ++p) {
        const double v = dot(pts.data() + p * d, dirs[a]);
        mn[a] = std::min(mn[a], v);
        mx[a] = std::max(mx[a], v);
      }
      for (int i = 0; i < agents; ++i) {
        if (velocity) traj.velocity(i, end, buf); else traj.position(i, end, buf);
        const double v = dot(buf.data(), dirs[a]);
        mn_t[a] = std::min(mn_t[a], v);
        mx_t[a] = std::max(mx_t[a], v);
      }
    }
  };

  {
    const auto pts = gather(false);
    extremes(pts, q.m, q.M, q.m_tilde, q.M_tilde, false);
    q.position_diameter = with_position_diameter ? point_diameter(pts, pts.size() / d, d) : kNaN;
  }
  if (second) {
    const auto pts = gather(true);
    extremes(pts, q.r, q.R, q.r_tilde, q.R_tilde, true);
    q.velocity_diameter = point_diameter(pts, pts.size() / d, d);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Constants

double gamma_constant(double K, int gamma, double T, double tau, double psi0, double alpha_tilde, int N) {
  const double g = static_cast<double>(gamma);
  const double exponent = -K * (0.5 * (g * g + 3.0 * g) * (T + tau) + tau);
  return std::exp(exponent) * std::pow(psi0 * alpha_tilde / (N - 1), g);
}

double decay_rate_first(double Gamma, int gamma, double T, double tau) {
  if (!(Gamma > 0.0 && Gamma < 1.0))
    throw Error(ErrorKind::DegenerateContraction,
                "contraction factor " + std::to_string(Gamma) + " is outside (0, 1)");
  return -std::log1p(-Gamma) / (gamma * (T + tau) + tau);
}

FirstOrderConstants first_order_constants(const Scenario& s) {
  require_pe(s);
  FirstOrderConstants c;
  c.agents = s.agents();
  c.depth = depth(s.graph);
  c.T = s.pe->T;
  c.alpha_tilde = s.pe->alpha_tilde;
  c.tau = s.tau;
  c.period = c.depth * (c.T + c.tau) + c.tau;
  c.K = s.influence.sup_norm();
  c.c0 = base_constants(s).c0;
  c.psi0 = s.influence.floor(c.c0);
  c.Gamma = gamma_constant(c.K, c.depth, c.T, c.tau, c.psi0, c.alpha_tilde, c.agents);
  if (c.Gamma > 0.0 && c.Gamma < 1.0) c.rate = decay_rate_first(c.Gamma, c.depth, c.T, c.tau);
  return c;
}

double phi_tilde(const Scenario& s, const BaseConstants& base, double running_dx) {
  return s.influence.running_min(s.tau * base.c0v + base.m0x + running_dx);
}

SecondOrderConstants second_order_constants(const Scenario& s, const Trajectory* traj) {
  require_pe(s);
  if (s.order != ModelOrder::Second) throw Error(ErrorKind::Config, "scenario is not second order");
  SecondOrderConstants c;
  const BaseConstants base = base_constants(s);
  c.agents = s.agents();
  c.depth = depth(s.graph);
  c.T = s.pe->T;
  c.alpha_tilde = s.pe->alpha_tilde;
  c.tau = s.tau;
  c.period = c.depth * (c.T + c.tau) + c.tau;
  c.K_tilde = s.influence.sup_norm();
  c.c0v = base.c0v;
  c.m0x = base.m0x;
  c.c_star = gamma_constant(c.K_tilde, c.depth, c.T, c.tau, 1.0, c.alpha_tilde, c.agents);
  if (!traj) return c;

  c.empirical = true;
  SampleTable table(*traj);
  std::vector<double> running(table.size());
  double run = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    run = std::max(run, block_diameter(table.x(k), table.agents(), table.dim()));
    running[k] = run;
  }
  c.sup_dx = run;
  c.d_star = c.tau * c.c0v + c.m0x + c.sup_dx;
  c.phi_hat = s.influence.running_min(c.d_star);
  const double eps = 1e-9 * std::max(1.0, traj->horizon());
  const int count = static_cast<int>(std::floor((traj->horizon() + eps) / c.period));
  for (int n = 0; n < count; ++n) {
    const auto [lo, hi] = table.range(-kInf, (n + 1) * c.period);
    (void)lo;
    const double rx = hi > 0 ? running[hi - 1] : 0.0;
    const double phi = phi_tilde(s, base, rx);
    c.phi_tilde.push_back(phi);
    c.Gamma.push_back(c.c_star * std::pow(phi, c.depth));
  }
  const double g = c.c_star * std::pow(c.phi_hat, c.depth);
  if (g > 0.0 && g < 1.0) c.mu = -std::log1p(-g) / c.period;
  return c;
}

// ---------------------------------------------------------------------------
// Reports

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "?";
}

bool BoundReport::passed() const { return failures() == 0; }

std::size_t BoundReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.status == CheckStatus::Fail; }));
}

const CheckRecord* BoundReport::find(const std::string& id) const {
  for (const auto& r : checks)
    if (r.id == id) return &r;
  return nullptr;
}

namespace {

// Fitted decay of a diameter series over t >= from, ignoring values at the
// round-off floor.
std::optional<double> fitted_rate(const SampleTable& table, const std::vector<double>& series, double from,
                                  double scale) {
  std::vector<double> ts, vs;
  for (std::size_t k = table.first_node(); k < table.size(); ++k) {
    if (table.time(k) < from) continue;
    if (!(series[k] > 1e-12 * scale)) break;
    ts.push_back(table.time(k));
    vs.push_back(series[k]);
  }
  if (ts.size() < 3) return std::nullopt;
  return fit_decay(ts, vs);
}

struct ProjectionChecks {
  Worst sandwich;
  Worst bounds;
};

// Interval extremes, the contraction sandwich on I_{n+1} and the invariant
// region for t >= n P - tau, for positions or velocities alike.
void projection_checks(const SampleTable& table, const Projections& proj, const std::vector<IntervalQuantities>& iq,
                       const std::vector<double>& factors, bool velocity, ProjectionChecks& out) {
  for (std::size_t a = 0; a < proj.max.size(); ++a) {
    const auto smax = suffix_max(proj.max[a]);
    const auto smin = suffix_min(proj.min[a]);
    for (std::size_t n = 0; n < iq.size(); ++n) {
      const auto& q = iq[n];
      const double lo = velocity ? q.r[a] : q.m[a];
      const double hi = velocity ? q.R[a] : q.M[a];
      const double lo_t = velocity ? q.r_tilde[a] : q.m_tilde[a];
      const double hi_t = velocity ? q.R_tilde[a] : q.M_tilde[a];
      const auto [first, unused] = table.range(q.start, q.start);
      (void)unused;
      if (first < table.size()) {
        out.bounds.add(hi - smax[first]);
        out.bounds.add(smin[first] - lo);
      }
      out.bounds.add(lo_t - lo);
      out.bounds.add(hi_t - lo_t);
      out.bounds.add(hi - hi_t);
      if (n + 1 < iq.size()) {
        const double g = factors[n];
        const double lower = lo + g * (hi_t - lo);
        const double upper = hi - g * (hi - lo_t);
        const auto [k0, k1] = table.range(iq[n + 1].start, iq[n + 1].end);
        for (std::size_t k = k0; k < k1; ++k) {
          out.sandwich.add(proj.min[a][k] - lower);
          out.sandwich.add(upper - proj.max[a][k]);
        }
      }
    }
  }
}

}  // namespace

BoundReport check_first_order(const Scenario& s, const Trajectory& traj, const FirstOrderConstants& c,
                              const std::vector<std::vector<double>>& dirs) {
  BoundReport report;
  report.order = ModelOrder::First;
  const SampleTable table(traj);
  const int agents = table.agents();
  const int d = table.dim();
  const double P = c.period;
  const int n_last = last_interval(traj.horizon(), P, s.analysis);

  std::vector<IntervalQuantities> iq;
  for (int n = 0; n <= n_last; ++n) iq.push_back(interval_quantities(table, traj, n, P, dirs));
  const double D0 = iq[0].position_diameter;
  const double tol = s.analysis.tolerance * D0;
  const double lemma = s.analysis.lemma_tolerance;

  std::vector<double> diam(table.size());
  for (std::size_t k = 0; k < table.size(); ++k) diam[k] = block_diameter(table.x(k), agents, d);
  const auto diam_suffix = suffix_max(diam);

  // (a) exponential decay of d(t)
  if (c.rate) {
    Worst w;
    for (std::size_t k = table.first_node(); k < table.size(); ++k)
      w.add(D0 * std::exp(-*c.rate * (table.time(k) - P)) - diam[k]);
    report.checks.push_back(make_record("decay_estimate", "d(t) <= D0 exp(-C (t - P)) for t >= 0", w, tol));
  } else {
    report.checks.push_back(skipped("decay_estimate", "d(t) <= D0 exp(-C (t - P)) for t >= 0", tol,
                                    "contraction factor outside (0, 1)"));
  }

  // (b) interval contraction
  const bool enough = iq.size() >= 2;
  if (enough) {
    Worst w;
    for (std::size_t n = 0; n + 1 < iq.size(); ++n)
      w.add((1.0 - c.Gamma) * iq[n].position_diameter - iq[n + 1].position_diameter);
    report.checks.push_back(make_record("interval_contraction", "D_{n+1} <= (1 - Gamma) D_n", w, tol));
  } else {
    report.checks.push_back(skipped("interval_contraction", "D_{n+1} <= (1 - Gamma) D_n", tol,
                                    "fewer than 2 complete intervals within the horizon"));
  }

  // (c) projection sandwich and the invariant region
  const Projections proj = project(table, dirs, false);
  ProjectionChecks pc;
  projection_checks(table, proj, iq, std::vector<double>(iq.size(), c.Gamma), false, pc);
  if (enough) {
    report.checks.push_back(make_record(
        "projection_sandwich", "m_n + Gamma (M~_n - m_n) <= <x_i(t), v> <= M_n - Gamma (M_n - m~_n) on I_{n+1}",
        pc.sandwich, tol));
  } else {
    report.checks.push_back(skipped("projection_sandwich", "projection sandwich on I_{n+1}", tol,
                                    "fewer than 2 complete intervals within the horizon"));
  }
  report.checks.push_back(make_record(
      "projection_bounds", "m_n <= m~_n <= M~_n <= M_n and m_n <= <x_i(t), v> <= M_n for t >= n P - tau", pc.bounds,
      lemma));

  // (d) opinions stay in the ball of radius C0
  {
    Worst w;
    for (std::size_t k = table.first_node(); k < table.size(); ++k)
      for (int i = 0; i < agents; ++i) w.add(c.c0 - norm(table.x(k, i)));
    report.checks.push_back(make_record("opinion_bound", "|x_i(t)| <= C0", w, lemma));
  }

  // (e) d(t) <= D_n after the start of I_n, and D_n nonincreasing
  {
    Worst w;
    for (std::size_t n = 0; n < iq.size(); ++n) {
      const auto [first, unused] = table.range(iq[n].start, iq[n].start);
      (void)unused;
      if (first < table.size()) w.add(iq[n].position_diameter - diam_suffix[first]);
      if (n + 1 < iq.size()) w.add(iq[n].position_diameter - iq[n + 1].position_diameter);
    }
    report.checks.push_back(
        make_record("diameter_monotone", "d(t) <= D_n for t >= n P - tau and D_{n+1} <= D_n", w, lemma));
  }

  // (f) the influence never drops below psi0 along the trajectory
  {
    Worst w;
    std::vector<double> xj(d);
    for (std::size_t k = table.first_node(); k < table.size(); ++k)
      for (int i = 0; i < agents; ++i)
        for (int j = 0; j < agents; ++j) {
          if (i == j || !s.graph.adjacent(i, j)) continue;
          delayed_position(s, table, traj, k, i, j, xj);
          w.add(s.influence(distance(table.x(k, i).data(), xj.data(), d)) - c.psi0);
        }
    report.checks.push_back(make_record("influence_floor", "psi(x_i(t), x_j(t - tau_ij(t))) >= psi0", w, lemma));
  }

  // Observed decay against the certified rate.
  std::optional<double> fitted;
  if (c.rate && D0 > 0.0) fitted = fitted_rate(table, diam, P, D0);
  if (fitted) {
    Worst w;
    w.add(*fitted - *c.rate);
    report.checks.push_back(make_record("empirical_rate", "fitted decay of d(t) over [P, horizon] >= C", w, kRateSlack));
  } else {
    report.checks.push_back(skipped("empirical_rate", "fitted decay of d(t) over [P, horizon] >= C", kRateSlack,
                                    "not enough positive samples after P"));
  }

  report.constants = {
      {"N", static_cast<double>(c.agents)},
      {"gamma", static_cast<double>(c.depth)},
      {"T", c.T},
      {"alpha_tilde", c.alpha_tilde},
      {"tau", c.tau},
      {"P", P},
      {"K", c.K},
      {"C0", c.c0},
      {"psi0", c.psi0},
      {"Gamma", c.Gamma},
      {"C", c.rate ? *c.rate : kNaN},
      {"D0", D0},
      {"intervals", static_cast<double>(iq.size())},
      {"fitted_rate", fitted ? *fitted : kNaN},
  };
  if (c.alpha_tilde * c.K > 1.0) report.notes.push_back("alpha_tilde * K > 1: the normalisation alpha_tilde K <= 1 does not hold");
  if (!c.rate) report.notes.push_back("contraction factor Gamma is outside (0, 1); no decay rate certified");
  return report;
}

BoundReport check_second_order(const Scenario& s, const Trajectory& traj, const SecondOrderConstants& c,
                               const std::vector<std::vector<double>>& dirs) {
  BoundReport report;
  report.order = ModelOrder::Second;
  const SampleTable table(traj);
  const int agents = table.agents();
  const int d = table.dim();
  const double P = c.period;
  const int n_last = last_interval(traj.horizon(), P, s.analysis);
  const BaseConstants base{0.0, c.c0v, c.m0x};

  std::vector<IntervalQuantities> iq;
  for (int n = 0; n <= n_last; ++n) iq.push_back(interval_quantities(table, traj, n, P, dirs, n == 0));
  const double D0 = iq[0].position_diameter;
  const double F0 = *iq[0].velocity_diameter;
  const double tol_v = s.analysis.tolerance * F0;
  const double reach = s.tau * c.c0v + c.m0x;
  const double tol_dist = s.analysis.tolerance * (reach + D0);
  const double lemma = s.analysis.lemma_tolerance;

  std::vector<double> dx(table.size()), dv(table.size()), running(table.size());
  double run = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    dx[k] = block_diameter(table.x(k), agents, d);
    dv[k] = block_diameter(table.v(k), agents, d);
    running[k] = run = std::max(run, dx[k]);
  }
  const auto dv_suffix = suffix_max(dv);

  // (a) sup d_X is finite and stops growing
  {
    const double sup = running.back();
    const auto [lo, hi] = table.range(-kInf, 0.75 * traj.horizon());
    (void)lo;
    const double earlier = hi > 0 ? running[hi - 1] : 0.0;
    Worst w;
    if (!std::isfinite(sup)) {
      w.add(-kInf);
    } else {
      w.add(sup > 0.0 ? -(sup - earlier) / sup : 0.0);
    }
    auto rec = make_record("position_diameter_bounded",
                           "relative growth of sup d_X over the last quarter of the horizon", w, kStabilisation);
    rec.note = "sup d_X = " + std::to_string(sup);
    report.checks.push_back(rec);
  }

  // (b) exponential decay of d_V(t)
  if (c.mu) {
    Worst w;
    for (std::size_t k = table.first_node(); k < table.size(); ++k)
      w.add(F0 * std::exp(-*c.mu * (table.time(k) - P)) - dv[k]);
    report.checks.push_back(make_record("velocity_decay", "d_V(t) <= F0 exp(-mu (t - P)) for t >= 0", w, tol_v));
  } else {
    report.checks.push_back(skipped("velocity_decay", "d_V(t) <= F0 exp(-mu (t - P)) for t >= 0", tol_v,
                                    "C* phi_hat^gamma outside (0, 1)"));
  }

  // (c) interval contraction with Gamma_{n+1}
  const bool enough = iq.size() >= 2;
  std::vector<double> factors(iq.size(), 0.0);
  for (std::size_t n = 0; n + 1 < iq.size(); ++n) factors[n] = c.Gamma.at(n);
  if (enough) {
    Worst w;
    for (std::size_t n = 0; n + 1 < iq.size(); ++n)
      w.add((1.0 - factors[n]) * *iq[n].velocity_diameter - *iq[n + 1].velocity_diameter);
    report.checks.push_back(
        make_record("velocity_interval_contraction", "F_{n+1} <= (1 - Gamma_{n+1}) F_n", w, tol_v));
  } else {
    report.checks.push_back(skipped("velocity_interval_contraction", "F_{n+1} <= (1 - Gamma_{n+1}) F_n", tol_v,
                                    "fewer than 2 complete intervals within the horizon"));
  }

  const Projections proj = project(table, dirs, true);
  ProjectionChecks pc;
  projection_checks(table, proj, iq, factors, true, pc);
  if (enough) {
    report.checks.push_back(make_record(
        "velocity_projection_sandwich",
        "r_n + Gamma_{n+1} (R~_n - r_n) <= <v_i(t), v> <= R_n - Gamma_{n+1} (R_n - r~_n) on I_{n+1}", pc.sandwich,
        tol_v));
  } else {
    report.checks.push_back(skipped("velocity_projection_sandwich", "velocity projection sandwich on I_{n+1}", tol_v,
                                    "fewer than 2 complete intervals within the horizon"));
  }
  report.checks.push_back(make_record(
      "velocity_projection_bounds", "r_n <= r~_n <= R~_n <= R_n and r_n <= <v_i(t), v> <= R_n for t >= n P - tau",
      pc.bounds, lemma));

  {
    Worst w;
    for (std::size_t n = 0; n < iq.size(); ++n) {
      const auto [first, unused] = table.range(iq[n].start, iq[n].start);
      (void)unused;
      if (first < table.size()) w.add(*iq[n].velocity_diameter - dv_suffix[first]);
      if (n + 1 < iq.size()) w.add(*iq[n].velocity_diameter - *iq[n + 1].velocity_diameter);
    }
    report.checks.push_back(make_record("velocity_diameter_monotone",
                                        "d_V(t) <= F_n for t >= n P - tau and F_{n+1} <= F_n", w, lemma));
  }

  // (d) delayed distance and (e) communication rate floor
  {
    Worst dist, rate;
    std::vector<double> xj(d);
    const double norm_factor = 1.0 / (agents - 1);
    for (std::size_t k = table.first_node(); k < table.size(); ++k) {
      const double phi = phi_tilde(s, base, running[k]);
      for (int i = 0; i < agents; ++i)
        for (int j = 0; j < agents; ++j) {
          if (i == j) continue;
          delayed_position(s, table, traj, k, i, j, xj);
          const double r = distance(table.x(k, i).data(), xj.data(), d);
          dist.add(reach + dx[k] - r);
          if (s.graph.adjacent(i, j)) rate.add((s.influence(r) - phi) * norm_factor);
        }
    }
    report.checks.push_back(make_record(
        "delayed_distance", "|x_i(t) - x_j(t - tau_ij(t))| <= tau C0V + M0X + d_X(t)", dist, tol_dist));
    report.checks.push_back(make_record("rate_floor", "c_ij(t) >= phi~(t) / (N - 1)", rate, lemma));
  }

  // (f) speeds stay below C0V
  {
    Worst w;
    for (std::size_t k = table.first_node(); k < table.size(); ++k)
      for (int i = 0; i < agents; ++i) w.add(c.c0v - norm(table.v(k, i)));
    report.checks.push_back(make_record("velocity_bound", "|v_i(t)| <= C0V", w, lemma));
  }

  std::optional<double> fitted;
  if (c.mu && F0 > 0.0) fitted = fitted_rate(table, dv, P, F0);
  if (fitted) {
    Worst w;
    w.add(*fitted - *c.mu);
    report.checks.push_back(
        make_record("empirical_rate", "fitted decay of d_V(t) over [P, horizon] >= mu", w, kRateSlack));
  } else {
    report.checks.push_back(skipped("empirical_rate", "fitted decay of d_V(t) over [P, horizon] >= mu", kRateSlack,
                                    "not enough positive samples after P"));
  }

  report.constants = {
      {"N", static_cast<double>(c.agents)},
      {"gamma", static_cast<double>(c.depth)},
      {"T", c.T},
      {"alpha_tilde", c.alpha_tilde},
      {"tau", c.tau},
      {"P", P},
      {"K_tilde", c.K_tilde},
      {"C0V", c.c0v},
      {"M0X", c.m0x},
      {"C_star", c.c_star},
      {"sup_dX", c.sup_dx},
      {"d_star", c.d_star},
      {"phi_hat", c.phi_hat},
      {"mu", c.mu ? *c.mu : kNaN},
      {"D0", D0},
      {"F0", F0},
      {"intervals", static_cast<double>(iq.size())},
      {"fitted_rate", fitted ? *fitted : kNaN},
  };
  for (std::size_t n = 0; n < c.Gamma.size(); ++n)
    report.constants.emplace_back("Gamma_" + std::to_string(n + 1), c.Gamma[n]);
  if (c.alpha_tilde * c.K_tilde > 1.0)
    report.notes.push_back("alpha_tilde * K_tilde > 1: the normalisation alpha_tilde K <= 1 does not hold");
  if (!c.mu) report.notes.push_back("C* phi_hat^gamma is outside (0, 1); no decay rate certified");
  return report;
}

double fit_decay(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 3)
    throw Error(ErrorKind::NonPositiveValue, "fit_decay needs at least three (t, value) points");
  const double n = static_cast<double>(times.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(values[k] > 0.0)) throw Error(ErrorKind::NonPositiveValue, "fit_decay needs strictly positive values");
    st += times[k];
    sy += std::log(values[k]);
  }
  const double mt = st / n;
  const double my = sy / n;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    num += (times[k] - mt) * (std::log(values[k]) - my);
    den += (times[k] - mt) * (times[k] - mt);
  }
  if (den == 0.0) throw Error(ErrorKind::NonPositiveValue, "fit_decay needs distinct times");
  return -num / den;
}

}  // namespace hkcs

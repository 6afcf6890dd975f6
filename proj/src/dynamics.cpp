#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace hkcs {

const char* to_string(ModelOrder order) { return order == ModelOrder::First ? "first" : "second"; }

// ---------------------------------------------------------------------------
// History

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Config, message);
}

void require_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v) require(std::isfinite(x), what + " must be finite");
}

}  // namespace

History History::constant(std::vector<double> point, double tau) {
  require(!point.empty(), "history point must have at least one component");
  require_finite(point, "history point");
  require(tau >= 0.0, "tau must be nonnegative");
  History h;
  h.kind_ = Kind::Constant;
  h.dim_ = static_cast<int>(point.size());
  h.tau_ = tau;
  h.times_ = {0.0};
  h.values_ = {std::move(point)};
  return h;
}

History History::linear(std::vector<double> start, std::vector<double> end, double tau) {
  require(!start.empty() && start.size() == end.size(), "linear history endpoints must share a dimension");
  require_finite(start, "history endpoint");
  require_finite(end, "history endpoint");
  require(tau >= 0.0, "tau must be nonnegative");
  History h;
  h.kind_ = Kind::Linear;
  h.dim_ = static_cast<int>(start.size());
  h.tau_ = tau;
  h.times_ = {-tau, 0.0};
  h.values_ = {std::move(start), std::move(end)};
  return h;
}

History History::sampled(std::vector<double> times, std::vector<std::vector<double>> values, double tau) {
  require(!times.empty() && times.size() == values.size(), "sampled history needs one value per time");
  require(times.front() == -tau && times.back() == 0.0, "sampled history must span exactly [-tau, 0]");
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    require(times[k + 1] > times[k], "sampled history times must be strictly increasing");
  const std::size_t dim = values.front().size();
  require(dim > 0, "history values need at least one component");
  for (const auto& v : values) {
    require(v.size() == dim, "sampled history values must share a dimension");
    require_finite(v, "history value");
  }
  History h;
  h.kind_ = Kind::Sampled;
  h.dim_ = static_cast<int>(dim);
  h.tau_ = tau;
  h.times_ = std::move(times);
  h.values_ = std::move(values);
  return h;
}

void History::eval(double s, std::span<double> out) const {
  if (s < -tau_ - 1e-12 * std::max(1.0, tau_) || s > 0.0)
    throw Error(ErrorKind::OutOfRange, "history queried outside [-tau, 0]");
  if (kind_ == Kind::Constant || times_.size() == 1) {
    std::copy(values_.front().begin(), values_.front().end(), out.begin());
    return;
  }
  if (s <= times_.front()) {
    std::copy(values_.front().begin(), values_.front().end(), out.begin());
    return;
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), s);
  if (it == times_.end()) {
    std::copy(values_.back().begin(), values_.back().end(), out.begin());
    return;
  }
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  const double w = (s - times_[k]) / (times_[k + 1] - times_[k]);
  for (int c = 0; c < dim_; ++c) out[c] = values_[k][c] + w * (values_[k + 1][c] - values_[k][c]);
}

std::vector<double> History::at(double s) const {
  std::vector<double> out(dim_);
  eval(s, out);
  return out;
}

std::vector<double> History::knots() const {
  if (kind_ == Kind::Constant) return tau_ > 0.0 ? std::vector<double>{-tau_, 0.0} : std::vector<double>{0.0};
  if (tau_ == 0.0) return {0.0};
  return times_;
}

// ---------------------------------------------------------------------------
// Scenario

double default_step(double tau) { return tau > 0.0 ? std::min(1e-2, tau / 10.0) : 1e-2; }

std::optional<double> Scenario::interval_length() const {
  if (!pe || !strongly_connected(graph)) return std::nullopt;
  const int gamma = depth(graph);
  return gamma * (pe->T + tau) + tau;
}

void Scenario::validate() const {
  const int n = agents();
  const std::size_t pairs = static_cast<std::size_t>(n) * n;
  require(dim >= 1, "dimension must be at least 1");
  require(std::isfinite(tau) && tau >= 0.0, "tau_max must be finite and nonnegative");
  require(delays.size() == pairs, "one delay per ordered pair is required");
  require(weights.size() == pairs, "one weight schedule per ordered pair is required");
  require(std::isfinite(step) && step > 0.0, "integration step must be positive");
  require(std::isfinite(horizon) && horizon >= 0.0, "horizon must be finite and nonnegative");
  for (const auto& d : delays) require(d.tau_max() <= tau, "delay bound exceeds tau_max");
  require(static_cast<int>(positions.size()) == n, "one position history per agent is required");
  for (const auto& h : positions) {
    require(h.dimension() == dim, "position history dimension mismatch");
    require(h.tau() == tau, "position history must be defined on [-tau_max, 0]");
  }
  if (order == ModelOrder::Second) {
    require(static_cast<int>(velocities.size()) == n, "one velocity history per agent is required");
    for (const auto& h : velocities) {
      require(h.dimension() == dim, "velocity history dimension mismatch");
      require(h.tau() == tau, "velocity history must be defined on [-tau_max, 0]");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!graph.adjacent(i, j)) continue;
      require(weight(i, j).defined_until() >= horizon,
              "weight schedule (" + std::to_string(i) + "," + std::to_string(j) +
                  ") ends before the horizon");
    }
  }
  if (pe) require(pe->T > 0.0 && pe->alpha_tilde > 0.0, "PE declaration needs T > 0 and alpha_tilde > 0");
}

// ---------------------------------------------------------------------------
// Trajectory evaluation

void Trajectory::eval_step(std::size_t k, std::size_t offset, int i, double t, std::span<double> out) const {
  const double t0 = nodes_[k];
  const double h = nodes_[k + 1] - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const std::size_t base = offset + static_cast<std::size_t>(i) * dim_;
  const double* y0 = states_.data() + k * stride_ + base;
  const double* y1 = states_.data() + (k + 1) * stride_ + base;
  const double* m0 = slope_start_.data() + k * stride_ + base;
  const double* m1 = slope_end_.data() + k * stride_ + base;
  for (int c = 0; c < dim_; ++c)
    out[c] = h00 * y0[c] + h10 * h * m0[c] + h01 * y1[c] + h11 * h * m1[c];
}

void Trajectory::eval_completed(std::size_t offset, int i, double t, std::span<double> out) const {
  const std::size_t completed = slope_end_.size() / stride_;
  const auto last = nodes_.begin() + static_cast<std::ptrdiff_t>(completed) + 1;
  auto it = std::upper_bound(nodes_.begin(), last, t);
  std::size_t k = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  if (k >= completed || nodes_[k] == t) {
    k = std::min(k, completed);
    const double* y = states_.data() + k * stride_ + offset + static_cast<std::size_t>(i) * dim_;
    std::copy(y, y + dim_, out.begin());
    return;
  }
  eval_step(k, offset, i, t, out);
}

void Trajectory::eval_block(std::size_t offset, int i, double t, std::span<double> out) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(horizon()));
  if (t < -tau_ - slack || t > horizon() + slack)
    throw Error(ErrorKind::OutOfRange, "trajectory queried outside [-tau, horizon] at t=" + std::to_string(t));
  if (i < 0 || i >= agents_) throw Error(ErrorKind::OutOfRange, "agent index out of range");
  if (t < 0.0) {
    const auto& hist = offset == 0 ? *xhist_ : *vhist_;
    hist[i].eval(std::max(t, -tau_), out);
    return;
  }
  eval_completed(offset, i, std::min(t, horizon()), out);
}

void Trajectory::position(int i, double t, std::span<double> out) const { eval_block(0, i, t, out); }

void Trajectory::velocity(int i, double t, std::span<double> out) const {
  if (order_ != ModelOrder::Second) throw Error(ErrorKind::OutOfRange, "first-order trajectories carry no velocity");
  eval_block(static_cast<std::size_t>(agents_) * dim_, i, t, out);
}

std::vector<double> Trajectory::position(int i, double t) const {
  std::vector<double> out(dim_);
  position(i, t, out);
  return out;
}

std::vector<double> Trajectory::velocity(int i, double t) const {
  std::vector<double> out(dim_);
  velocity(i, t, out);
  return out;
}

std::vector<double> Trajectory::sample_times(double a, double b) const {
  std::vector<double> out;
  out.push_back(a);
  for (double t : history_grid_)
    if (t > a && t < b) out.push_back(t);
  auto lo = std::upper_bound(nodes_.begin(), nodes_.end(), a);
  for (auto it = lo; it != nodes_.end() && *it < b; ++it) out.push_back(*it);
  if (b > a) out.push_back(b);
  return out;
}

std::vector<double> Trajectory::all_sample_times() const {
  std::vector<double> out = history_grid_;
  out.insert(out.end(), nodes_.begin(), nodes_.end());
  return out;
}

// ---------------------------------------------------------------------------
// Grid

std::vector<double> integration_grid(const Scenario& s) {
  const double horizon = s.horizon;
  if (horizon == 0.0) return {0.0};
  const double h = s.step;
  const double merge = 1e-12 * std::max(1.0, horizon);

  std::vector<double> required;
  const int n = s.agents();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (s.graph.adjacent(i, j)) {
        auto sw = s.weight(i, j).switch_times(0.0, horizon);
        required.insert(required.end(), sw.begin(), sw.end());
      }
  if (auto period = s.interval_length(); period && *period > 0.0) {
    for (int k = 1;; ++k) {
      const double left = k * *period - s.tau;
      if (left >= horizon) break;
      if (left > 0.0) required.push_back(left);
      if (k * *period < horizon) required.push_back(k * *period);
    }
  }
  std::sort(required.begin(), required.end());
  std::vector<double> anchors;
  for (double t : required) {
    if (t <= merge || t >= horizon - merge) continue;
    if (anchors.empty() || t - anchors.back() > merge) anchors.push_back(t);
  }

  const auto count = static_cast<long long>(std::ceil(horizon / h - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count) + anchors.size() + 2);
  grid.push_back(0.0);
  for (long long k = 1; k < count; ++k) {
    const double u = static_cast<double>(k) * h;
    if (u >= horizon - merge) break;
    auto it = std::lower_bound(anchors.begin(), anchors.end(), u);
    const bool near_right = it != anchors.end() && *it - u < 0.25 * h;
    const bool near_left = it != anchors.begin() && u - *(it - 1) < 0.25 * h;
    if (!near_right && !near_left) grid.push_back(u);
  }
  grid.insert(grid.end(), anchors.begin(), anchors.end());
  grid.push_back(horizon);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// ---------------------------------------------------------------------------
// Right-hand sides

void rhs_first_order(const Scenario& s, double t, std::span<const double> alpha,
                     std::span<const double> state, DelayedAccessor& delayed, std::span<double> out) {
  const int n = s.agents();
  const int d = s.dim;
  const double norm = 1.0 / (n - 1);
  std::vector<double> xj(d);
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double* xi = state.data() + static_cast<std::size_t>(i) * d;
    double* dxi = out.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < n; ++j) {
      if (j == i || !s.graph.adjacent(i, j)) continue;
      const double a = alpha[static_cast<std::size_t>(i) * n + j];
      if (a == 0.0) continue;
      const double lag = s.delay(i, j)(t);
      if (lag == 0.0) {
        std::copy_n(state.data() + static_cast<std::size_t>(j) * d, d, xj.begin());
      } else {
        delayed.lookup(j, t - lag, xj, {});
      }
      double sq = 0.0;
      for (int c = 0; c < d; ++c) sq += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      const double w = a * s.influence(std::sqrt(sq)) * norm;
      for (int c = 0; c < d; ++c) dxi[c] += w * (xj[c] - xi[c]);
    }
  }
}

void rhs_second_order(const Scenario& s, double t, std::span<const double> alpha,
                      std::span<const double> state, DelayedAccessor& delayed, std::span<double> out) {
  const int n = s.agents();
  const int d = s.dim;
  const std::size_t half = static_cast<std::size_t>(n) * d;
  const double norm = 1.0 / (n - 1);
  std::vector<double> xj(d), vj(d);
  std::copy_n(state.data() + half, half, out.begin());
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(half), out.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double* xi = state.data() + static_cast<std::size_t>(i) * d;
    const double* vi = state.data() + half + static_cast<std::size_t>(i) * d;
    double* dvi = out.data() + half + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < n; ++j) {
      if (j == i || !s.graph.adjacent(i, j)) continue;
      const double a = alpha[static_cast<std::size_t>(i) * n + j];
      if (a == 0.0) continue;
      const double lag = s.delay(i, j)(t);
      if (lag == 0.0) {
        std::copy_n(state.data() + static_cast<std::size_t>(j) * d, d, xj.begin());
        std::copy_n(state.data() + half + static_cast<std::size_t>(j) * d, d, vj.begin());
      } else {
        delayed.lookup(j, t - lag, xj, vj);
      }
      double sq = 0.0;
      for (int c = 0; c < d; ++c) sq += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      const double w = a * s.influence(std::sqrt(sq)) * norm;
      for (int c = 0; c < d; ++c) dvi[c] += w * (vj[c] - vi[c]);
    }
  }
}

// ---------------------------------------------------------------------------
// Method of steps

class Stepper : public DelayedAccessor {
 public:
  explicit Stepper(const Scenario& s) : s_(s) {
    s.validate();
    const int n = s.agents();
    traj_.order_ = s.order;
    traj_.agents_ = n;
    traj_.dim_ = s.dim;
    traj_.tau_ = s.tau;
    traj_.stride_ = static_cast<std::size_t>(n) * s.dim * (s.order == ModelOrder::Second ? 2 : 1);
    traj_.xhist_ = std::make_shared<const std::vector<History>>(s.positions);
    traj_.vhist_ = std::make_shared<const std::vector<History>>(s.velocities);

    std::vector<double> grid;
    if (s.tau > 0.0) {
      const auto count = static_cast<long long>(std::ceil(s.tau / s.step - 1e-9));
      for (long long k = 0; k < count; ++k) grid.push_back(-s.tau + static_cast<double>(k) * s.step);
      for (const auto* hists : {&s.positions, &s.velocities})
        for (const auto& h : *hists)
          for (double t : h.knots())
            if (t < 0.0) grid.push_back(t);
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      grid.erase(std::remove_if(grid.begin(), grid.end(), [](double t) { return t >= 0.0; }), grid.end());
    }
    traj_.history_grid_ = std::move(grid);
    alpha_.assign(static_cast<std::size_t>(n) * n, 0.0);
    scratch_.resize(traj_.stride_);
  }

  Trajectory integrate(const std::vector<double>& grid) {
    std::vector<double> y0 = initial_state();
    traj_.nodes_.reserve(grid.size());
    traj_.states_.reserve(grid.size() * traj_.stride_);
    traj_.nodes_.push_back(grid.front());
    traj_.states_.insert(traj_.states_.end(), y0.begin(), y0.end());

    const std::size_t m = traj_.stride_;
    std::vector<double> k1(m), k2(m), k3(m), k4(m), y(m), y1(m), kend(m);
    std::vector<double> previous_alpha;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double t0 = grid[k];
      const double t1 = grid[k + 1];
      const double h = t1 - t0;
      begin_step(k, t0, t1);
      const std::span<const double> yk(traj_.states_.data() + k * m, m);

      if (k > 0 && alpha_ == previous_alpha) {
        std::copy_n(traj_.slope_end_.data() + (k - 1) * m, m, k1.begin());
      } else {
        rhs(t0, yk, k1);
      }
      traj_.slope_start_.insert(traj_.slope_start_.end(), k1.begin(), k1.end());

      for (std::size_t c = 0; c < m; ++c) y[c] = yk[c] + 0.5 * h * k1[c];
      rhs(t0 + 0.5 * h, y, k2);
      for (std::size_t c = 0; c < m; ++c) y[c] = yk[c] + 0.5 * h * k2[c];
      rhs(t0 + 0.5 * h, y, k3);
      for (std::size_t c = 0; c < m; ++c) y[c] = yk[c] + h * k3[c];
      rhs(t1, y, k4);
      for (std::size_t c = 0; c < m; ++c)
        y1[c] = yk[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);

      rhs(t1, y1, kend);
      traj_.nodes_.push_back(t1);
      traj_.states_.insert(traj_.states_.end(), y1.begin(), y1.end());
      traj_.slope_end_.insert(traj_.slope_end_.end(), kend.begin(), kend.end());
      previous_alpha = alpha_;
    }
    traj_.extrapolated_ = extrapolated_;
    return std::move(traj_);
  }

  Trajectory rebuild(const std::vector<double>& nodes, const std::vector<double>& states) {
    const std::size_t m = traj_.stride_;
    if (nodes.empty() || states.size() != nodes.size() * m)
      throw Error(ErrorKind::Format, "node and state counts disagree");
    traj_.nodes_.push_back(nodes.front());
    traj_.states_.insert(traj_.states_.end(), states.begin(), states.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<double> k1(m), kend(m);
    std::vector<double> previous_alpha;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      begin_step(k, nodes[k], nodes[k + 1]);
      const std::span<const double> yk(traj_.states_.data() + k * m, m);
      if (k > 0 && alpha_ == previous_alpha) {
        std::copy_n(traj_.slope_end_.data() + (k - 1) * m, m, k1.begin());
      } else {
        rhs(nodes[k], yk, k1);
      }
      traj_.slope_start_.insert(traj_.slope_start_.end(), k1.begin(), k1.end());
      const std::span<const double> y1(states.data() + (k + 1) * m, m);
      rhs(nodes[k + 1], y1, kend);
      traj_.nodes_.push_back(nodes[k + 1]);
      traj_.states_.insert(traj_.states_.end(), y1.begin(), y1.end());
      traj_.slope_end_.insert(traj_.slope_end_.end(), kend.begin(), kend.end());
      previous_alpha = alpha_;
    }
    traj_.extrapolated_ = extrapolated_;
    return std::move(traj_);
  }

  void lookup(int j, double s, std::span<double> x, std::span<double> v) override {
    const std::size_t half = static_cast<std::size_t>(traj_.agents_) * traj_.dim_;
    if (s <= 0.0) {
      const double clamped = std::max(s, -traj_.tau_);
      (*traj_.xhist_)[j].eval(clamped, x);
      if (!v.empty()) (*traj_.vhist_)[j].eval(clamped, v);
      return;
    }
    if (s <= step_start_) {
      traj_.eval_completed(0, j, s, x);
      if (!v.empty()) traj_.eval_completed(half, j, s, v);
      return;
    }
    // The delayed time falls inside the step being computed.
    ++extrapolated_;
    if (step_ > 0) {
      traj_.eval_step(step_ - 1, 0, j, s, x);
      if (!v.empty()) traj_.eval_step(step_ - 1, half, j, s, v);
      return;
    }
    const double dt = s - step_start_;
    const double* y = traj_.states_.data();
    const double* f = traj_.slope_start_.data();
    const std::size_t base = static_cast<std::size_t>(j) * traj_.dim_;
    for (int c = 0; c < traj_.dim_; ++c) x[c] = y[base + c] + dt * f[base + c];
    if (!v.empty())
      for (int c = 0; c < traj_.dim_; ++c) v[c] = y[half + base + c] + dt * f[half + base + c];
  }

 private:
  std::vector<double> initial_state() const {
    std::vector<double> y0(traj_.stride_);
    const int n = s_.agents();
    const int d = s_.dim;
    for (int i = 0; i < n; ++i) {
      s_.positions[i].eval(0.0, std::span<double>(y0.data() + static_cast<std::size_t>(i) * d, d));
      if (s_.order == ModelOrder::Second)
        s_.velocities[i].eval(0.0, std::span<double>(y0.data() + static_cast<std::size_t>(n + i) * d, d));
    }
    return y0;
  }

  // Weights are constant on the open step because every switch time is a node.
  void begin_step(std::size_t k, double t0, double t1) {
    step_ = k;
    step_start_ = t0;
    const int n = s_.agents();
    const double mid = 0.5 * (t0 + t1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        alpha_[static_cast<std::size_t>(i) * n + j] = s_.graph.adjacent(i, j) ? s_.weight(i, j).value(mid) : 0.0;
  }

  void rhs(double t, std::span<const double> state, std::span<double> out) {
    if (s_.order == ModelOrder::First) {
      rhs_first_order(s_, t, alpha_, state, *this, out);
    } else {
      rhs_second_order(s_, t, alpha_, state, *this, out);
    }
  }

  const Scenario& s_;
  Trajectory traj_;
  std::vector<double> alpha_;
  std::vector<double> scratch_;
  std::size_t step_ = 0;
  double step_start_ = 0.0;
  std::size_t extrapolated_ = 0;
};

Trajectory integrate(const Scenario& s) {
  Stepper stepper(s);
  return stepper.integrate(integration_grid(s));
}

Trajectory rebuild(const Scenario& s, std::vector<double> nodes, std::vector<double> states) {
  Stepper stepper(s);
  if (nodes.empty() || nodes.front() != 0.0) throw Error(ErrorKind::Format, "trajectory nodes must start at t = 0");
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
    if (!(nodes[k + 1] > nodes[k])) throw Error(ErrorKind::Format, "trajectory nodes must be strictly increasing");
  return stepper.rebuild(nodes, states);
}

}  // namespace hkcs

#include "signals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "topology.hpp"

namespace hkcs {

namespace {

// Slack granted to the floating-point window integral when comparing it with
// a declared alpha_tilde.
constexpr double kPeSlack = 1e-12;

bool finite(double x) { return std::isfinite(x); }

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Config, message);
}

// Reduce t into [0, period).
double wrap(double t, double period) {
  double r = std::fmod(t, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// DelaySpec

DelaySpec DelaySpec::constant(double value, double tau_max) {
  require(finite(value) && finite(tau_max), "delay parameters must be finite");
  require(tau_max >= 0.0, "tau_max must be nonnegative");
  require(value >= 0.0 && value <= tau_max, "constant delay must lie in [0, tau_max]");
  DelaySpec d;
  d.kind_ = Kind::Constant;
  d.base_ = value;
  d.tau_max_ = tau_max;
  return d;
}

DelaySpec DelaySpec::sinusoid(double base, double amplitude, double omega, double phase,
                              double tau_max) {
  require(finite(base) && finite(amplitude) && finite(omega) && finite(phase) && finite(tau_max),
          "delay parameters must be finite");
  require(amplitude >= 0.0, "sinusoid amplitude must be nonnegative");
  require(base - amplitude >= 0.0, "sinusoid delay must stay nonnegative (base >= amplitude)");
  require(base + amplitude <= tau_max, "sinusoid delay must stay below tau_max (base + amplitude <= tau_max)");
  DelaySpec d;
  d.kind_ = Kind::Sinusoid;
  d.base_ = base;
  d.amplitude_ = amplitude;
  d.omega_ = omega;
  d.phase_ = phase;
  d.tau_max_ = tau_max;
  return d;
}

double DelaySpec::operator()(double t) const {
  if (kind_ == Kind::Constant) return base_;
  return std::clamp(base_ + amplitude_ * std::sin(omega_ * t + phase_), 0.0, tau_max_);
}

// ---------------------------------------------------------------------------
// WeightSchedule

WeightSchedule WeightSchedule::constant(double value) {
  return piecewise({0.0, 1.0}, {value}, true);
}

WeightSchedule WeightSchedule::blink(double on, double period, double offset) {
  require(finite(on) && finite(period) && finite(offset), "blink parameters must be finite");
  require(period > 0.0, "blink period must be positive");
  require(on >= 0.0 && on <= period, "blink on-duration must lie in [0, period]");
  if (on == 0.0) return piecewise({0.0, period}, {0.0}, true);
  if (on == period) return piecewise({0.0, period}, {1.0}, true);
  const double start = wrap(offset, period);
  const double stop = start + on;
  if (stop <= period) {
    std::vector<double> b{0.0};
    std::vector<double> v;
    if (start > 0.0) {
      b.push_back(start);
      v.push_back(0.0);
    }
    v.push_back(1.0);
    if (stop < period) {
      b.push_back(stop);
      v.push_back(0.0);
    }
    b.push_back(period);
    return piecewise(std::move(b), std::move(v), true);
  }
  // The on-phase wraps around the period boundary.
  return piecewise({0.0, stop - period, start, period}, {1.0, 0.0, 1.0}, true);
}

WeightSchedule WeightSchedule::piecewise(std::vector<double> breakpoints, std::vector<double> values,
                                         bool periodic, std::optional<double> terminal) {
  require(!values.empty(), "weight schedule needs at least one segment");
  require(breakpoints.size() == values.size() + 1,
          "weight schedule needs exactly one more breakpoint than values");
  require(breakpoints.front() == 0.0, "weight schedule must start at t = 0");
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    require(finite(breakpoints[k + 1]) && breakpoints[k + 1] > breakpoints[k],
            "weight breakpoints must be finite and strictly increasing");
  }
  for (double v : values) require(finite(v) && v >= 0.0 && v <= 1.0, "weight values must lie in [0, 1]");
  if (terminal) {
    require(!periodic, "a periodic schedule cannot declare a terminal value");
    require(finite(*terminal) && *terminal >= 0.0 && *terminal <= 1.0,
            "terminal weight must lie in [0, 1]");
  }
  WeightSchedule w;
  w.breakpoints_ = std::move(breakpoints);
  w.values_ = std::move(values);
  w.periodic_ = periodic;
  w.terminal_ = terminal;
  w.prefix_.assign(w.breakpoints_.size(), 0.0);
  for (std::size_t k = 0; k < w.values_.size(); ++k) {
    w.prefix_[k + 1] = w.prefix_[k] + w.values_[k] * (w.breakpoints_[k + 1] - w.breakpoints_[k]);
  }
  return w;
}

double WeightSchedule::defined_until() const noexcept {
  if (certified_forever()) return std::numeric_limits<double>::infinity();
  return breakpoints_.back();
}

double WeightSchedule::value_in_pattern(double r) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), r);
  std::size_t k = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  k = std::min(k, values_.size() - 1);
  return values_[k];
}

double WeightSchedule::partial(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= breakpoints_.back()) return prefix_.back();
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return prefix_[k] + values_[k] * (r - breakpoints_[k]);
}

double WeightSchedule::value(double t) const {
  if (t < 0.0) throw Error(ErrorKind::OutOfRange, "weight schedules are defined for t >= 0");
  if (periodic_) return value_in_pattern(wrap(t, period()));
  if (t < breakpoints_.back()) return value_in_pattern(t);
  if (terminal_) return *terminal_;
  throw Error(ErrorKind::HorizonExceeded,
              "weight schedule is undefined beyond t = " + std::to_string(breakpoints_.back()));
}

double WeightSchedule::cumulative(double t) const {
  if (t < 0.0) throw Error(ErrorKind::OutOfRange, "weight schedules are defined for t >= 0");
  if (periodic_) {
    const double p = period();
    const double q = std::floor(t / p);
    double r = t - q * p;
    r = std::clamp(r, 0.0, p);
    return q * prefix_.back() + partial(r);
  }
  const double end = breakpoints_.back();
  if (t <= end) return partial(t);
  if (terminal_) return prefix_.back() + *terminal_ * (t - end);
  throw Error(ErrorKind::HorizonExceeded,
              "weight schedule is undefined beyond t = " + std::to_string(end));
}

double WeightSchedule::integrate(double t0, double t1) const {
  if (!(t0 >= 0.0 && t0 <= t1)) throw Error(ErrorKind::OutOfRange, "integration bounds need 0 <= t0 <= t1");
  if (t0 == t1) return 0.0;
  return cumulative(t1) - cumulative(t0);
}

std::vector<double> WeightSchedule::switch_times(double a, double b) const {
  std::vector<double> out;
  const std::size_t m = values_.size();
  if (periodic_) {
    const double p = period();
    const double first = std::max(0.0, std::floor(a / p));
    const double last = std::ceil(b / p);
    for (double j = first; j <= last; j += 1.0) {
      for (std::size_t k = 0; k < m; ++k) {
        const double prev = values_[(k + m - 1) % m];
        if (prev == values_[k]) continue;
        const double t = breakpoints_[k] + j * p;
        if (t > a && t < b) out.push_back(t);
      }
    }
  } else {
    for (std::size_t k = 1; k < m; ++k) {
      if (values_[k] != values_[k - 1] && breakpoints_[k] > a && breakpoints_[k] < b)
        out.push_back(breakpoints_[k]);
    }
    const double end = breakpoints_.back();
    if (terminal_ && *terminal_ != values_.back() && end > a && end < b) out.push_back(end);
  }
  std::sort(out.begin(), out.end());
  return out;
}

WindowMinimum pe_window_minimum(const WeightSchedule& w, double T, double horizon) {
  if (!(T > 0.0) || !finite(T)) throw Error(ErrorKind::Config, "PE window T must be positive");
  if (!(horizon >= T)) throw Error(ErrorKind::Config, "PE horizon must be at least T");

  // The window integral is piecewise linear in t, with kinks only where t or
  // t + T crosses a breakpoint; its infimum sits on one of those candidates.
  std::vector<double> candidates{0.0};
  const auto& b = w.breakpoints();
  if (w.periodic()) {
    const double p = w.period();
    for (double bk : b) {
      candidates.push_back(wrap(bk, p));
      candidates.push_back(wrap(bk - T, p));
    }
  } else {
    const double last_start = w.terminal() ? std::numeric_limits<double>::infinity() : horizon - T;
    if (!w.terminal()) candidates.push_back(last_start);
    for (double bk : b) {
      for (double c : {bk, bk - T}) {
        if (c >= 0.0 && c <= last_start) candidates.push_back(c);
      }
    }
  }
  WindowMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (double t : candidates) {
    const double g = w.integrate(t, t + T);
    if (g < best.margin) best = {g, t};
  }
  return best;
}

double pe_margin(const WeightSchedule& w, double T, double horizon) {
  return pe_window_minimum(w, T, horizon).margin;
}

PeWitness verify_pe(const Digraph& g, std::span<const WeightSchedule> schedules, double T,
                    double alpha_tilde, double horizon) {
  const int n = g.size();
  if (schedules.size() != static_cast<std::size_t>(n) * n)
    throw Error(ErrorKind::Config, "schedule set must hold one schedule per ordered pair");
  if (!(alpha_tilde > 0.0)) throw Error(ErrorKind::Config, "alpha_tilde must be positive");

  PeWitness witness;
  witness.T = T;
  witness.alpha_tilde = alpha_tilde;
  witness.verified_horizon = std::numeric_limits<double>::infinity();

  std::ostringstream violations;
  int first_i = -1, first_j = -1;
  WindowMinimum first_bad{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!g.adjacent(i, j)) continue;
      const auto& w = schedules[static_cast<std::size_t>(i) * n + j];
      const WindowMinimum wm = pe_window_minimum(w, T, horizon);
      if (!w.certified_forever()) witness.verified_horizon = std::min(witness.verified_horizon, horizon);
      if (wm.margin < witness.tightest_margin) {
        witness.tightest_margin = wm.margin;
        witness.tightest_i = i;
        witness.tightest_j = j;
      }
      if (wm.margin < alpha_tilde - kPeSlack * std::max(1.0, T)) {
        if (first_i < 0) {
          first_i = i;
          first_j = j;
          first_bad = wm;
        }
        if (violations.tellp() > 0) violations << ",";
        violations << " (" << i << "," << j << ") margin " << wm.margin << " at t=" << wm.start;
      }
    }
  }
  if (first_i >= 0) {
    throw PeViolationError(first_i, first_j, first_bad.start, first_bad.margin,
                           "window integral below alpha_tilde for arcs" + violations.str());
  }
  return witness;
}

// ---------------------------------------------------------------------------
// InfluenceFunction

const char* to_string(DivergenceClass c) {
  switch (c) {
    case DivergenceClass::Diverges: return "diverges";
    case DivergenceClass::Converges: return "converges";
    case DivergenceClass::Unknown: return "unknown";
  }
  return "unknown";
}

InfluenceFunction InfluenceFunction::constant(double k0) {
  require(finite(k0), "influence k0 must be finite");
  InfluenceFunction f;
  f.family_ = Family::Constant;
  f.k0_ = k0;
  return f;
}

InfluenceFunction InfluenceFunction::radial_rational(double k0, double beta) {
  require(finite(k0) && finite(beta), "influence parameters must be finite");
  require(beta >= 0.0, "radial_rational beta must be nonnegative");
  InfluenceFunction f;
  f.family_ = Family::RadialRational;
  f.k0_ = k0;
  f.rate_ = beta;
  return f;
}

InfluenceFunction InfluenceFunction::radial_exponential(double k0, double lambda) {
  require(finite(k0) && finite(lambda), "influence parameters must be finite");
  require(lambda >= 0.0, "radial_exponential lambda must be nonnegative");
  InfluenceFunction f;
  f.family_ = Family::RadialExponential;
  f.k0_ = k0;
  f.rate_ = lambda;
  return f;
}

InfluenceFunction InfluenceFunction::table(std::vector<double> radii, std::vector<double> values) {
  require(!radii.empty() && radii.size() == values.size(), "influence table needs matching radii and values");
  require(radii.front() == 0.0, "influence table radii must start at 0");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    require(finite(radii[k + 1]) && radii[k + 1] > radii[k], "influence table radii must be strictly increasing");
  for (double v : values) require(finite(v), "influence table values must be finite");
  InfluenceFunction f;
  f.family_ = Family::Table;
  f.radii_ = std::move(radii);
  f.samples_ = std::move(values);
  f.k0_ = f.samples_.front();
  return f;
}

double InfluenceFunction::operator()(double r) const {
  switch (family_) {
    case Family::Constant: return k0_;
    case Family::RadialRational: return k0_ * std::pow(1.0 + r * r, -0.5 * rate_);
    case Family::RadialExponential: return k0_ * std::exp(-rate_ * r);
    case Family::Table: {
      if (r >= radii_.back()) return samples_.back();
      auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      const std::size_t k = it == radii_.begin() ? 0 : static_cast<std::size_t>(it - radii_.begin()) - 1;
      const double s = (r - radii_[k]) / (radii_[k + 1] - radii_[k]);
      return samples_[k] + s * (samples_[k + 1] - samples_[k]);
    }
  }
  return k0_;
}

double InfluenceFunction::operator()(std::span<const double> y, std::span<const double> z) const {
  double sq = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) sq += (y[k] - z[k]) * (y[k] - z[k]);
  return (*this)(std::sqrt(sq));
}

bool InfluenceFunction::nonincreasing() const {
  if (family_ != Family::Table) return k0_ >= 0.0;
  for (std::size_t k = 0; k + 1 < samples_.size(); ++k)
    if (samples_[k + 1] > samples_[k]) return false;
  return true;
}

double InfluenceFunction::sup_norm() const {
  if (family_ != Family::Table) return std::abs(k0_);
  double best = 0.0;
  for (double v : samples_) best = std::max(best, std::abs(v));
  return best;
}

double InfluenceFunction::running_min(double radius) const {
  if (!(radius >= 0.0)) throw Error(ErrorKind::OutOfRange, "running_min radius must be nonnegative");
  if (family_ == Family::Table) {
    // A piecewise-linear function attains its minimum at a knot or an endpoint.
    double best = (*this)(radius);
    for (std::size_t k = 0; k < radii_.size() && radii_[k] <= radius; ++k)
      best = std::min(best, samples_[k]);
    return best;
  }
  // The analytic families are monotone in r.
  return std::min((*this)(0.0), (*this)(radius));
}

double InfluenceFunction::floor(double c0) const {
  if (!(c0 >= 0.0)) throw Error(ErrorKind::OutOfRange, "C0 must be nonnegative");
  const double floor_value = running_min(2.0 * c0);
  if (!(floor_value > 0.0)) {
    std::ostringstream os;
    os << "influence function is not strictly positive on [0, " << 2.0 * c0 << "] (min " << floor_value << ")";
    throw Error(ErrorKind::NonPositiveFloor, os.str());
  }
  return floor_value;
}

DivergenceClass InfluenceFunction::divergence_class(int gamma) const {
  switch (family_) {
    case Family::Constant:
      return k0_ > 0.0 ? DivergenceClass::Diverges : DivergenceClass::Unknown;
    case Family::RadialRational:
      // running_min(t)^gamma ~ t^(-beta gamma): integrable iff beta gamma > 1.
      return rate_ * gamma <= 1.0 ? DivergenceClass::Diverges : DivergenceClass::Converges;
    case Family::RadialExponential:
      return rate_ == 0.0 ? DivergenceClass::Diverges : DivergenceClass::Converges;
    case Family::Table:
      return DivergenceClass::Unknown;
  }
  return DivergenceClass::Unknown;
}

}  // namespace hkcs

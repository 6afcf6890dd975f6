#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace hkcs {

class Digraph;

// Continuous delay tau_ij(t) bounded by a global tau_max.
class DelaySpec {
 public:
  enum class Kind { Constant, Sinusoid };

  static DelaySpec constant(double value, double tau_max);
  // base + amplitude * sin(omega * t + phase); requires base - amplitude >= 0
  // and base + amplitude <= tau_max.
  static DelaySpec sinusoid(double base, double amplitude, double omega, double phase,
                            double tau_max);

  double operator()(double t) const;

  Kind kind() const noexcept { return kind_; }
  double base() const noexcept { return base_; }
  double amplitude() const noexcept { return amplitude_; }
  double omega() const noexcept { return omega_; }
  double phase() const noexcept { return phase_; }
  double tau_max() const noexcept { return tau_max_; }

  bool operator==(const DelaySpec&) const = default;

 private:
  DelaySpec() = default;

  Kind kind_ = Kind::Constant;
  double base_ = 0.0;
  double amplitude_ = 0.0;
  double omega_ = 0.0;
  double phase_ = 0.0;
  double tau_max_ = 0.0;
};

// Piecewise-constant weight alpha(t) in [0, 1]. values[k] holds on
// [breakpoints[k], breakpoints[k+1]). A periodic schedule repeats with period
// breakpoints.back(); an aperiodic one either holds a terminal value after the
// last breakpoint or is undefined there.
class WeightSchedule {
 public:
  static WeightSchedule constant(double value);
  // On (value 1) for `on` seconds of every `period`, starting `offset` seconds
  // into the period.
  static WeightSchedule blink(double on, double period, double offset = 0.0);
  static WeightSchedule piecewise(std::vector<double> breakpoints, std::vector<double> values,
                                  bool periodic, std::optional<double> terminal = std::nullopt);

  double value(double t) const;
  double cumulative(double t) const;
  double integrate(double t0, double t1) const;

  // Times in the open interval (a, b) at which the value changes.
  std::vector<double> switch_times(double a, double b) const;

  bool periodic() const noexcept { return periodic_; }
  double period() const noexcept { return breakpoints_.back(); }
  std::optional<double> terminal() const noexcept { return terminal_; }
  // Window minima over every t >= 0 are exact for periodic schedules and for
  // schedules with a terminal value.
  bool certified_forever() const noexcept { return periodic_ || terminal_.has_value(); }
  double defined_until() const noexcept;
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const WeightSchedule&) const = default;

 private:
  WeightSchedule() = default;
  double partial(double r) const;  // integral over [0, r], r within the base pattern
  double value_in_pattern(double r) const;

  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> prefix_;  // prefix_[k] = integral over [0, breakpoints_[k]]
  bool periodic_ = false;
  std::optional<double> terminal_;
};

struct WindowMinimum {
  double margin = 0.0;
  double start = 0.0;
};

// Smallest integral of w over windows [t, t + T]. Certified-forever schedules
// are minimised over all t >= 0; otherwise over t in [0, horizon - T].
WindowMinimum pe_window_minimum(const WeightSchedule& w, double T, double horizon);
double pe_margin(const WeightSchedule& w, double T, double horizon);

struct PeWitness {
  double T = 0.0;
  double alpha_tilde = 0.0;
  double verified_horizon = 0.0;  // +inf when every schedule is certified forever
  double tightest_margin = std::numeric_limits<double>::infinity();
  int tightest_i = -1;
  int tightest_j = -1;
};

// schedules is row-major N x N; only pairs with chi_ij = 1 are checked.
// Throws PeViolationError naming every violating pair.
PeWitness verify_pe(const Digraph& g, std::span<const WeightSchedule> schedules, double T,
                    double alpha_tilde, double horizon);

enum class DivergenceClass { Diverges, Converges, Unknown };
const char* to_string(DivergenceClass c);

// Radial influence kernel phi(r), r >= 0. The first-order model reads it as
// psi(y, z) = phi(|y - z|).
class InfluenceFunction {
 public:
  enum class Family { Constant, RadialRational, RadialExponential, Table };

  static InfluenceFunction constant(double k0);
  // k0 * (1 + r^2)^(-beta / 2)
  static InfluenceFunction radial_rational(double k0, double beta);
  // k0 * exp(-lambda * r)
  static InfluenceFunction radial_exponential(double k0, double lambda);
  // Piecewise-linear through (radii[k], values[k]); radii start at 0 and the
  // last value is held beyond the last radius.
  static InfluenceFunction table(std::vector<double> radii, std::vector<double> values);

  double operator()(double r) const;
  double operator()(std::span<const double> y, std::span<const double> z) const;

  Family family() const noexcept { return family_; }
  double k0() const noexcept { return k0_; }
  double beta() const noexcept { return rate_; }
  double lambda() const noexcept { return rate_; }
  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<double>& samples() const noexcept { return samples_; }
  bool nonincreasing() const;

  // ||psi||_inf
  double sup_norm() const;
  // min of phi over [0, R]. Exact for every family (tables are piecewise linear).
  double running_min(double radius) const;
  // psi_0 = min psi(y, z) over |y|, |z| <= c0, i.e. running_min(2 c0).
  // Throws NonPositiveFloor if the minimum is not strictly positive.
  double floor(double c0) const;
  // Whether the integral over [0, inf) of running_min(t)^gamma diverges.
  DivergenceClass divergence_class(int gamma) const;

  bool operator==(const InfluenceFunction&) const = default;

 private:
  InfluenceFunction() = default;

  Family family_ = Family::Constant;
  double k0_ = 1.0;
  double rate_ = 0.0;
  std::vector<double> radii_;
  std::vector<double> samples_;
};

}  // namespace hkcs

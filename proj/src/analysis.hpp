#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"

namespace hkcs {

// max_{i,j} |x_i(t) - x_j(t)|
double diameter(const Trajectory& traj, double t);

struct Diameters {
  double x = 0.0;
  double v = 0.0;
};
Diameters diameters_xv(const Trajectory& traj, double t);

// Largest pairwise distance in a row-major block of `count` points of
// dimension `dim`.
double point_diameter(std::span<const double> points, std::size_t count, int dim);

struct BaseConstants {
  double c0 = 0.0;   // max |x_i(s)| over the histories
  double c0v = 0.0;  // max |v_i(s)| over the velocity histories
  double m0x = 0.0;  // max_i max_{s,t} |x_i(s) - x_i(t)| over the histories
};
BaseConstants base_constants(const Scenario& s);

// Unit vectors for the projection checks. For dim <= 3 the signed axis
// vectors come first; dim == 1 has only {+1} and {-1}.
std::vector<std::vector<double>> directions(int dim, int count, std::uint64_t seed);

// Trajectory states at every exported time, laid out [time][agent][component].
class SampleTable {
 public:
  explicit SampleTable(const Trajectory& traj);

  std::size_t size() const noexcept { return times_.size(); }
  int agents() const noexcept { return agents_; }
  int dim() const noexcept { return dim_; }
  bool has_velocity() const noexcept { return !v_.empty(); }
  const std::vector<double>& times() const noexcept { return times_; }
  double time(std::size_t k) const { return times_[k]; }
  // Index of the first sample at t >= 0.
  std::size_t first_node() const noexcept { return first_node_; }

  std::span<const double> x(std::size_t k) const;
  std::span<const double> v(std::size_t k) const;
  std::span<const double> x(std::size_t k, int i) const;
  std::span<const double> v(std::size_t k, int i) const;
  // Samples with a - eps <= t <= b + eps, as a half-open index range.
  std::pair<std::size_t, std::size_t> range(double a, double b) const;

 private:
  std::vector<double> times_;
  std::vector<double> x_;
  std::vector<double> v_;
  int agents_ = 0;
  int dim_ = 0;
  std::size_t first_node_ = 0;
  double eps_ = 0.0;
};

struct IntervalQuantities {
  int n = 0;
  double start = 0.0;  // n P - tau, clamped to -tau
  double end = 0.0;    // n P
  // D_n over positions; F_n over velocities (second order only).
  double position_diameter = 0.0;
  std::optional<double> velocity_diameter;
  // Per direction: interval min/max and the single-time extremes at n P.
  std::vector<double> m, M, m_tilde, M_tilde;
  std::vector<double> r, R, r_tilde, R_tilde;
};

// Throws OutOfRange when I_n extends past the horizon.
IntervalQuantities interval_quantities(const Trajectory& traj, int n, double period,
                                       const std::vector<std::vector<double>>& dirs);
IntervalQuantities interval_quantities(const SampleTable& table, const Trajectory& traj, int n,
                                       double period, const std::vector<std::vector<double>>& dirs,
                                       bool with_position_diameter = true);

// exp(-K (0.5 (gamma^2 + 3 gamma)(T + tau) + tau)) (psi0 alpha_tilde / (N - 1))^gamma
double gamma_constant(double K, int gamma, double T, double tau, double psi0, double alpha_tilde, int N);
// log(1 / (1 - Gamma)) / (gamma (T + tau) + tau). Throws DegenerateContraction
// unless 0 < Gamma < 1.
double decay_rate_first(double Gamma, int gamma, double T, double tau);

struct FirstOrderConstants {
  int agents = 0;
  int depth = 0;
  double T = 0.0;
  double alpha_tilde = 0.0;
  double tau = 0.0;
  double period = 0.0;  // gamma (T + tau) + tau
  double K = 0.0;       // sup of psi
  double c0 = 0.0;
  double psi0 = 0.0;
  double Gamma = 0.0;
  std::optional<double> rate;  // absent when Gamma is outside (0, 1)
};

// Throws HypothesisError without a PE declaration or strong connectivity and
// NonPositiveFloor when psi vanishes on the invariant ball.
FirstOrderConstants first_order_constants(const Scenario& s);

struct SecondOrderConstants {
  int agents = 0;
  int depth = 0;
  double T = 0.0;
  double alpha_tilde = 0.0;
  double tau = 0.0;
  double period = 0.0;
  double K_tilde = 0.0;  // sup of psi tilde
  double c0v = 0.0;
  double m0x = 0.0;
  double c_star = 0.0;
  // The remaining fields need a trajectory.
  bool empirical = false;
  double sup_dx = 0.0;
  double d_star = 0.0;  // tau C0V + M0X + sup d_X over the simulated horizon
  double phi_hat = 0.0;
  std::vector<double> phi_tilde;  // phi tilde((n + 1) P)
  std::vector<double> Gamma;      // Gamma_{n+1}
  std::optional<double> mu;       // absent when C* phi_hat^gamma is outside (0, 1)
};

SecondOrderConstants second_order_constants(const Scenario& s, const Trajectory* traj = nullptr);
// running_min(psi tilde, tau C0V + M0X + max_{s in [-tau, t]} d_X(s))
double phi_tilde(const Scenario& s, const BaseConstants& base, double running_dx);

enum class CheckStatus { Pass, Fail, Skipped };
const char* to_string(CheckStatus status);

struct CheckRecord {
  std::string id;
  std::string description;
  double margin = 0.0;  // worst RHS - LHS; NaN when skipped
  double tolerance = 0.0;
  CheckStatus status = CheckStatus::Skipped;
  std::string note;
};

struct BoundReport {
  ModelOrder order = ModelOrder::First;
  std::vector<CheckRecord> checks;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<std::string> notes;

  bool passed() const;
  std::size_t failures() const;
  const CheckRecord* find(const std::string& id) const;
};

BoundReport check_first_order(const Scenario& s, const Trajectory& traj, const FirstOrderConstants& c,
                              const std::vector<std::vector<double>>& dirs);
BoundReport check_second_order(const Scenario& s, const Trajectory& traj, const SecondOrderConstants& c,
                               const std::vector<std::vector<double>>& dirs);

// Negated least-squares slope of log(value) against t. Throws
// NonPositiveValue for a nonpositive value or fewer than three points.
double fit_decay(std::span<const double> times, std::span<const double> values);

}  // namespace hkcs

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "signals.hpp"
#include "topology.hpp"

namespace hkcs {

enum class ModelOrder { First, Second };
const char* to_string(ModelOrder order);

// Initial datum of one agent on [-tau, 0].
class History {
 public:
  enum class Kind { Constant, Linear, Sampled };

  static History constant(std::vector<double> point, double tau);
  // start at s = -tau, end at s = 0, linear in between.
  static History linear(std::vector<double> start, std::vector<double> end, double tau);
  // Piecewise-linear through samples; times must run from -tau to 0.
  static History sampled(std::vector<double> times, std::vector<std::vector<double>> values, double tau);

  void eval(double s, std::span<double> out) const;
  std::vector<double> at(double s) const;
  // Breakpoints of the piecewise-linear representation, endpoints included.
  std::vector<double> knots() const;

  Kind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dim_; }
  double tau() const noexcept { return tau_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }

  bool operator==(const History&) const = default;

 private:
  History() = default;

  Kind kind_ = Kind::Constant;
  int dim_ = 0;
  double tau_ = 0.0;
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

struct PeDeclaration {
  double T = 1.0;
  double alpha_tilde = 1.0;

  bool operator==(const PeDeclaration&) const = default;
};

struct AnalysisSettings {
  int directions = 32;
  std::optional<int> n_max;
  double tolerance = 1e-6;        // relative slack for the decay and contraction bounds
  double lemma_tolerance = 1e-9;  // absolute slack for invariant-region checks

  bool operator==(const AnalysisSettings&) const = default;
};

double default_step(double tau);

struct Scenario {
  ModelOrder order = ModelOrder::First;
  Digraph graph = Digraph::complete(2);
  int dim = 1;
  double tau = 0.0;
  std::vector<DelaySpec> delays;        // row-major N x N
  std::vector<WeightSchedule> weights;  // row-major N x N
  InfluenceFunction influence = InfluenceFunction::constant(1.0);
  std::vector<History> positions;
  std::vector<History> velocities;  // second order only
  double horizon = 10.0;
  double step = 1e-2;
  std::optional<PeDeclaration> pe;
  AnalysisSettings analysis;
  std::uint64_t seed = 0;

  int agents() const noexcept { return graph.size(); }
  const DelaySpec& delay(int i, int j) const { return delays[static_cast<std::size_t>(i) * agents() + j]; }
  const WeightSchedule& weight(int i, int j) const {
    return weights[static_cast<std::size_t>(i) * agents() + j];
  }
  // gamma (T + tau) + tau, when a PE window is declared and the digraph is
  // strongly connected.
  std::optional<double> interval_length() const;

  // Throws ConfigError describing the first inconsistency.
  void validate() const;
};

// Dense-output solution. Stores states at grid nodes together with the
// one-sided derivatives at both ends of every step; evaluation between nodes
// is cubic Hermite, and t < 0 is served by the histories.
class Trajectory {
 public:
  ModelOrder order() const noexcept { return order_; }
  int agents() const noexcept { return agents_; }
  int dim() const noexcept { return dim_; }
  double tau() const noexcept { return tau_; }
  double horizon() const noexcept { return nodes_.back(); }
  std::size_t state_size() const noexcept { return stride_; }

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  std::span<const double> node_state(std::size_t k) const {
    return {states_.data() + k * stride_, stride_};
  }
  std::span<const double> step_start_slope(std::size_t k) const {
    return {slope_start_.data() + k * stride_, stride_};
  }
  std::span<const double> step_end_slope(std::size_t k) const {
    return {slope_end_.data() + k * stride_, stride_};
  }

  // Throws OutOfRange outside [-tau, horizon].
  void position(int i, double t, std::span<double> out) const;
  void velocity(int i, double t, std::span<double> out) const;
  std::vector<double> position(int i, double t) const;
  std::vector<double> velocity(int i, double t) const;

  // History sampling grid below zero followed by the integration nodes,
  // restricted to [a, b] with both endpoints included.
  std::vector<double> sample_times(double a, double b) const;
  // Every time that appears in the exported file.
  std::vector<double> all_sample_times() const;
  const std::vector<double>& history_grid() const noexcept { return history_grid_; }

  // Delayed lookups that fell inside the step being computed and were served
  // by extrapolating the previous step's interpolant.
  std::size_t extrapolated_lookups() const noexcept { return extrapolated_; }

 private:
  friend class Stepper;

  void eval_block(std::size_t offset, int i, double t, std::span<double> out) const;
  void eval_completed(std::size_t offset, int i, double t, std::span<double> out) const;
  void eval_step(std::size_t k, std::size_t offset, int i, double t, std::span<double> out) const;

  ModelOrder order_ = ModelOrder::First;
  int agents_ = 0;
  int dim_ = 0;
  double tau_ = 0.0;
  std::size_t stride_ = 0;
  std::shared_ptr<const std::vector<History>> xhist_;
  std::shared_ptr<const std::vector<History>> vhist_;
  std::vector<double> history_grid_;
  std::vector<double> nodes_;
  std::vector<double> states_;
  std::vector<double> slope_start_;
  std::vector<double> slope_end_;
  std::size_t extrapolated_ = 0;
};

// Integration nodes: uniform steps of size h merged with every weight switch
// time and every endpoint of the analysis intervals I_n inside (0, horizon).
std::vector<double> integration_grid(const Scenario& s);

// Right-hand sides for a given state, weights alpha (row-major N x N) and
// delayed-state accessor. The accessor fills the delayed position (and, for
// the second-order model, the delayed velocity) of agent j at time s.
struct DelayedAccessor {
  virtual ~DelayedAccessor() = default;
  virtual void lookup(int j, double s, std::span<double> x, std::span<double> v) = 0;
};

void rhs_first_order(const Scenario& s, double t, std::span<const double> alpha,
                     std::span<const double> state, DelayedAccessor& delayed, std::span<double> out);
void rhs_second_order(const Scenario& s, double t, std::span<const double> alpha,
                      std::span<const double> state, DelayedAccessor& delayed, std::span<double> out);

// Method of steps with the classical 4-stage explicit scheme between nodes.
Trajectory integrate(const Scenario& s);
// Rebuild a trajectory from stored node states, re-deriving the slopes from
// the right-hand side.
Trajectory rebuild(const Scenario& s, std::vector<double> nodes, std::vector<double> states);

}  // namespace hkcs

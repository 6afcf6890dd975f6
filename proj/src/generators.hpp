#pragma once

#include <cstdint>

#include "scenario_io.hpp"

namespace hkcs {

// First-order scenario satisfying every hypothesis of the consensus theorem:
// N in 2..6, d in 1..3, a random strongly connected digraph, blink or
// telegraph schedules with a certified PE declaration, constant or
// sinusoidal delays with tau_max in {0} or [0.1, 1], radial_rational psi and
// a horizon of three interval lengths.
ScenarioConfig random_first_order_config(std::uint64_t seed);

// Second-order counterpart with beta * gamma <= 1 and a horizon long enough
// for the position diameter to settle.
ScenarioConfig random_second_order_config(std::uint64_t seed);

// Any valid configuration, exercising every family the schema accepts.
ScenarioConfig random_config(std::uint64_t seed);

struct PeriodicSample {
  WeightSchedule schedule = WeightSchedule::constant(1.0);
  double T = 1.0;
};

// Periodic piecewise-constant schedule whose breakpoints and window length
// sit on multiples of period / grid.
PeriodicSample random_periodic_schedule(std::uint64_t seed, int grid = 1000);

// Largest alpha_tilde the schedules certify for window T over every arc,
// capped at 1 / K.
double certified_alpha(const Scenario& s, double T);

}  // namespace hkcs

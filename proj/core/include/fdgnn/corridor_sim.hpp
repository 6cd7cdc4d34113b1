#pragma once

// Desk-scale microsimulation of a signalized arterial.
//
// Each travel direction is a single through lane. Vehicles follow a
// Krauss-style rule (safe speed from the leader's updated state, imperfection
// sigma, headway tau) and stop at red or yellow when they can do so at the
// comfortable deceleration. Left turners leave the lane at the detector
// (turn pockets are abstracted away); right turners leave at the stop line.
// Side streets are point queues served at a saturation headway during their
// phase; vehicles turning onto the arterial join it just past the stop line.

#include <cstdint>
#include <vector>

#include "fdgnn/corridor.hpp"
#include "fdgnn/matrix.hpp"

namespace fdgnn {

inline constexpr double kTimestep = 0.5;
inline constexpr double kVehicleLength = 5.0;
inline constexpr double kSaturationHeadway = 2.0;
// Joining vehicles are placed this far past the stop line (rear bumper clear
// of vehicles queued at the line).
inline constexpr double kJoinOffset = 10.0;
inline constexpr double kMinSpeedFactor = 0.8;
inline constexpr double kMaxSpeedFactor = 2.0;
inline constexpr int kGridlockCycles = 10;

// Deterministic in the scenario (seed included). Throws ConfigError for an
// invalid scenario and SimulationError on gridlock.
SimulationLog run_scenario(const Scenario& scenario);

// Corridor travel times (exit - entry) of arterial-entry vehicles that
// crossed the final stop line of `direction`.
std::vector<double> extract_travel_times(const SimulationLog& log, Direction direction);
// Same, restricted to vehicles whose corridor entry lies in [entry_begin, entry_end).
std::vector<double> extract_travel_times(const SimulationLog& log, Direction direction, double entry_begin,
                                         double entry_end);

// Number of detector events for (intersection, phase) with time in [t0, t1).
std::int64_t aggregate_detector_counts(const SimulationLog& log, int intersection, int phase, double t0, double t1);

// K×8 count matrix; column p-1 holds phase p.
Matrix detector_count_matrix(const SimulationLog& log, int intersections, double t0, double t1);

// Lower bound on corridor travel time for a vehicle with the given speed factor.
double free_flow_time(const CorridorSpec& corridor, Direction direction, double speed_factor);

}  // namespace fdgnn

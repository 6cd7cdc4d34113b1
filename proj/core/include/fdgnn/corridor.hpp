#pragma once

// Domain types for a signalized east-west arterial corridor.
//
// Intersections are indexed 0..K-1 from west to east. NEMA phases follow the
// usual dual-ring layout with phases 2 (eastbound through) and 6 (westbound
// through) coordinated:
//
//   ring 1: 1 (WB left), 2 (EB through) | 3 (SB left), 4 (NB through)
//   ring 2: 5 (EB left), 6 (WB through) | 7 (NB left), 8 (SB through)
//
// Phases 1, 2, 5, 6 sit on the arterial side of the barrier.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fdgnn {

inline constexpr int kPhaseCount = 8;
inline constexpr std::array<int, 4> kArterialPhases{1, 2, 5, 6};
inline constexpr std::array<int, 4> kCrossPhases{3, 4, 7, 8};

enum class Direction { kEast = 0, kWest = 1 };
enum class Approach { kEastbound = 0, kWestbound = 1, kNorthbound = 2, kSouthbound = 3 };
enum class Movement { kLeft = 0, kThrough = 1, kRight = 2 };

const char* to_string(Direction d);
Direction direction_from_string(const std::string& s);

// NEMA phase serving a movement from an approach.
int phase_for(Approach approach, Movement movement);

struct CorridorSpec {
  int intersections = 8;
  // Distance between intersection j and j+1, meters, for each travel
  // direction. Both have intersections - 1 entries.
  std::vector<double> segment_east;
  std::vector<double> segment_west;
  double detector_setback = 500.0;
  double speed_limit = 15.0;
  // Length of the arterial approach upstream of the first intersection in
  // each direction. Must exceed the detector setback.
  double entry_length = 600.0;

  static CorridorSpec uniform(int intersections, double segment_length);
  double corridor_length(Direction d) const;
};

struct PhaseTiming {
  double green = 0.0;
  double min_green = 0.0;
  double max_green = 0.0;
  double yellow = 4.0;
  double all_red = 2.0;

  double interval() const { return green + yellow + all_red; }
};

struct TimingPlan {
  double cycle = 180.0;
  double offset = 0.0;
  // phases[p - 1] for NEMA phase p.
  std::array<PhaseTiming, kPhaseCount> phases{};
  // Service order per ring; the first two entries precede the barrier.
  std::array<std::array<int, 4>, 2> ring_sequence{{{2, 1, 3, 4}, {6, 5, 7, 8}}};

  const PhaseTiming& phase(int p) const { return phases.at(static_cast<std::size_t>(p - 1)); }
  PhaseTiming& phase(int p) { return phases.at(static_cast<std::size_t>(p - 1)); }
  // Time from cycle start to the barrier.
  double barrier_time() const;
};

struct DrivingBehavior {
  double accel = 2.6;
  double decel = 4.5;
  double emergency_decel = 9.0;
  double min_gap = 2.5;
  double sigma = 0.5;
  double tau = 1.0;
  double lc_strategic = 1.0;
  double lc_cooperative = 1.0;
  double lc_speed_gain = 1.0;
  double speed_factor_mean = 1.0;
  double speed_factor_stdev = 0.1;
};

// Ratios ordered [EB L,T,R, WB L,T,R, NB L,T,R, SB L,T,R].
using TurningRatios = std::array<double, 12>;

inline double turning_ratio(const TurningRatios& r, Approach a, Movement m) {
  return r[static_cast<std::size_t>(a) * 3 + static_cast<std::size_t>(m)];
}

// Arrival rates, vehicles per hour.
struct Demand {
  double eastbound = 0.0;
  double westbound = 0.0;
  // Side-street approaches, one entry per intersection.
  std::vector<double> northbound;
  std::vector<double> southbound;
};

struct ScheduledDeparture {
  double time = 0.0;
  Direction direction = Direction::kEast;
};

enum class TmcMode { kReal, kRandom };

const char* to_string(TmcMode m);
TmcMode tmc_mode_from_string(const std::string& s);

struct Scenario {
  std::string id;
  CorridorSpec corridor;
  std::vector<TimingPlan> plans;
  std::vector<TurningRatios> tmc;
  DrivingBehavior behavior;
  Demand demand;
  double duration = 2700.0;
  // Interval whose entering vehicles define the travel-time targets.
  double measurement_start = 300.0;
  double measurement_length = 1200.0;
  std::uint64_t seed = 0;
  TmcMode tmc_mode = TmcMode::kReal;
  // Calibration switches: every phase shows green, and extra vehicles are
  // inserted at fixed times on top of the Poisson demand.
  bool hold_green = false;
  std::vector<ScheduledDeparture> scheduled;
};

// Throws ConfigError naming the first violated invariant.
void validate(const CorridorSpec& c);
void validate(const TimingPlan& p);
void validate(const DrivingBehavior& b);
void validate(const Scenario& s);

struct DetectorEvent {
  int intersection = 0;
  int phase = 0;
  double time = 0.0;

  bool operator==(const DetectorEvent&) const = default;
};

enum class Origin { kArterialEntry, kSideStreet };

struct VehicleRecord {
  std::int64_t id = 0;
  Origin origin = Origin::kArterialEntry;
  // Travel direction on the arterial; empty for side-street vehicles that
  // never join it.
  std::optional<Direction> direction;
  double spawn_time = 0.0;
  double speed_factor = 1.0;
  // Crossing of the first stop line of the direction (arterial entries only).
  std::optional<double> corridor_entry;
  // Crossing of the final stop line of the direction.
  std::optional<double> corridor_exit;
  // Removal from the network by any route.
  std::optional<double> left_network;

  bool operator==(const VehicleRecord&) const = default;
};

struct SimulationLog {
  std::string scenario_id;
  double duration = 0.0;
  double timestep = 0.5;
  std::vector<DetectorEvent> detector_events;
  std::vector<VehicleRecord> vehicles;
  std::int64_t spawned = 0;
  std::int64_t exited = 0;
  std::int64_t on_network = 0;

  bool operator==(const SimulationLog&) const = default;
};

}  // namespace fdgnn

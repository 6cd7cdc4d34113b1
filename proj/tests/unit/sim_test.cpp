#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/scenario_io.hpp"
#include "fdgnn/scenario_sampler.hpp"
#include "fdgnn/signal.hpp"
#include "fixtures.hpp"

using namespace fdgnn;
using fdgnn::testing::sampled_scenario;

namespace {

Scenario empty_scenario(std::uint64_t seed) {
  Scenario s = sampled_scenario(seed);
  s.demand.eastbound = 0.0;
  s.demand.westbound = 0.0;
  std::fill(s.demand.northbound.begin(), s.demand.northbound.end(), 0.0);
  std::fill(s.demand.southbound.begin(), s.demand.southbound.end(), 0.0);
  return s;
}

// One deterministic through vehicle: no dawdling, fixed speed factor.
Scenario lone_vehicle(double depart, double factor) {
  Scenario s = empty_scenario(5);
  for (auto& r : s.tmc) r = TurningRatios{0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0};
  s.behavior.sigma = 0.0;
  s.behavior.speed_factor_mean = factor;
  s.behavior.speed_factor_stdev = 0.0;
  s.scheduled.push_back({depart, Direction::kEast});
  return s;
}

}  // namespace

TEST(Signal, CycleStartShowsCoordinatedPhases) {
  const Scenario s = sampled_scenario(1);
  for (const auto& plan : s.plans) {
    EXPECT_EQ(signal_state(plan, plan.offset), (PhaseSet{2, 6}));
  }
}

TEST(Signal, RingsRespectTheBarrier) {
  const Scenario s = sampled_scenario(2);
  const TimingPlan& plan = s.plans[3];
  for (double t = 0; t < 3 * plan.cycle; t += 0.25) {
    const PhaseSet g = signal_state(plan, t);
    int ring1 = 0, ring2 = 0;
    for (int p : {1, 2, 3, 4}) ring1 += g.contains(p);
    for (int p : {5, 6, 7, 8}) ring2 += g.contains(p);
    ASSERT_LE(ring1, 1);
    ASSERT_LE(ring2, 1);
    const bool r1_arterial = g.contains(1) || g.contains(2);
    const bool r1_cross = g.contains(3) || g.contains(4);
    const bool r2_arterial = g.contains(5) || g.contains(6);
    const bool r2_cross = g.contains(7) || g.contains(8);
    ASSERT_FALSE(r1_arterial && r2_cross) << t;
    ASSERT_FALSE(r1_cross && r2_arterial) << t;
  }
}

TEST(Signal, MalformedPlanIsConfigError) {
  TimingPlan plan = sampled_scenario(3).plans[0];
  plan.cycle += 17.0;
  EXPECT_THROW(signal_state(plan, 0.0), ConfigError);
  EXPECT_THROW(signal_state(sampled_scenario(3).plans[0], -1.0), ConfigError);
}

TEST(Sampler, CycleWithinRange) {
  std::mt19937_64 rng(99);
  const SamplingRanges ranges;
  for (int i = 0; i < 1000; ++i) {
    const Scenario s = sample_scenario(rng, ranges, CorridorSpec::uniform(8, 600.0),
                                       i % 2 ? TmcMode::kRandom : TmcMode::kReal, "x");
    for (const auto& p : s.plans) {
      ASSERT_GE(p.cycle, 150.0);
      ASSERT_LE(p.cycle, 240.0);
    }
    ASSERT_TRUE(within_ranges(s, ranges));
  }
}

TEST(Sampler, DerivedSeedsIgnoreGenerationOrder) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Simulator, ZeroDemandLogsNothing) {
  const SimulationLog log = run_scenario(empty_scenario(4));
  EXPECT_TRUE(log.detector_events.empty());
  EXPECT_TRUE(extract_travel_times(log, Direction::kEast).empty());
  EXPECT_TRUE(extract_travel_times(log, Direction::kWest).empty());
  EXPECT_EQ(log.spawned, 0);
}

TEST(Simulator, DeterministicInSeed) {
  const Scenario s = sampled_scenario(6);
  EXPECT_EQ(run_scenario(s), run_scenario(s));
}

TEST(Simulator, ConservesVehicles) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const SimulationLog log = run_scenario(sampled_scenario(seed));
    EXPECT_EQ(log.spawned, log.exited + log.on_network);
    EXPECT_EQ(static_cast<std::int64_t>(log.vehicles.size()), log.spawned);
  }
}

TEST(Simulator, LoneVehicleUnderHoldGreenMatchesKinematics) {
  Scenario s = lone_vehicle(20.0, 1.2);
  s.hold_green = true;
  const auto tt = extract_travel_times(run_scenario(s), Direction::kEast);
  ASSERT_EQ(tt.size(), 1u);
  const double expected = s.corridor.corridor_length(Direction::kEast) / (s.corridor.speed_limit * 1.2);
  EXPECT_NEAR(tt[0], expected, kTimestep);
}

TEST(TravelTimes, ExitMinusEntry) {
  SimulationLog log;
  VehicleRecord v;
  v.direction = Direction::kEast;
  v.corridor_entry = 10.0;
  v.corridor_exit = 250.0;
  log.vehicles.push_back(v);
  VehicleRecord stuck = v;
  stuck.corridor_exit.reset();
  log.vehicles.push_back(stuck);
  VehicleRecord side = v;
  side.origin = Origin::kSideStreet;
  log.vehicles.push_back(side);
  EXPECT_EQ(extract_travel_times(log, Direction::kEast), std::vector<double>{240.0});
  EXPECT_TRUE(extract_travel_times(log, Direction::kWest).empty());
  EXPECT_TRUE(extract_travel_times(log, Direction::kEast, 11.0, 100.0).empty());
}

TEST(DetectorCounts, HalfOpenWindow) {
  SimulationLog log;
  for (double t : {1.0, 2.0, 3.0, 300.0}) log.detector_events.push_back({0, 2, t});
  log.detector_events.push_back({1, 2, 2.0});
  EXPECT_EQ(aggregate_detector_counts(log, 0, 2, 0.0, 300.0), 3);
  EXPECT_EQ(aggregate_detector_counts(log, 0, 2, 300.0, 600.0), 1);
  EXPECT_EQ(aggregate_detector_counts(log, 0, 6, 0.0, 300.0), 0);
  const Matrix m = detector_count_matrix(log, 2, 0.0, 300.0);
  EXPECT_EQ(m(0, 1), 3.0);
  EXPECT_EQ(m(1, 1), 1.0);
}

TEST(ScenarioIo, RoundTrip) {
  const Scenario s = sampled_scenario(21, TmcMode::kRandom);
  const Scenario back = scenario_from_json(scenario_to_json(s));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
  const SimulationLog log = run_scenario(s);
  std::stringstream io;
  write_simulation_log(io, log);
  EXPECT_EQ(read_simulation_log(io), log);
}

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "fdgnn/corridor.hpp"

namespace fdgnn {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SamplingRanges {
  // Whole seconds.
  Range cycle{150.0, 240.0};
  double yellow = 4.0;
  double all_red = 2.0;
  double min_green_left = 7.0;
  double min_green_through = 15.0;
  // Share of a barrier group's slack given to its left-turn phase.
  Range left_share{0.0, 0.35};

  Range accel{1.6, 3.6};
  Range decel{3.0, 6.0};
  Range emergency_decel{6.0, 12.0};
  Range min_gap{1.0, 4.0};
  Range sigma{0.1, 1.0};
  Range tau{0.1, 3.0};
  Range lc_strategic{0.1, 3.0};
  Range lc_cooperative{0.1, 1.0};
  Range lc_speed_gain{0.1, 3.0};
  Range speed_factor_mean{1.0, 1.5};
  Range speed_factor_stdev{0.1, 2.0};

  // veh/h per approach.
  Range arterial_demand{150.0, 450.0};
  Range side_demand{20.0, 120.0};

  double duration = 2700.0;
  double measurement_start = 300.0;
  double measurement_length = 1200.0;
};

// Throws ConfigError for empty or inverted ranges.
void validate(const SamplingRanges& r);

// Turning-ratio template used in real mode.
TurningRatios real_tmc_template();

// Seed for scenario `index` of a run seeded with `seed`; independent of the
// order in which scenarios are generated.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Draws one scenario. Infeasible timing draws are retried up to 100 times,
// then ConfigError.
Scenario sample_scenario(std::mt19937_64& rng, const SamplingRanges& ranges, const CorridorSpec& corridor,
                         TmcMode mode, const std::string& id);

// True when every sampled quantity of `s` lies inside `ranges`.
bool within_ranges(const Scenario& s, const SamplingRanges& ranges);

}  // namespace fdgnn

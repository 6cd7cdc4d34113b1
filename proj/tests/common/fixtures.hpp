#pragma once

#include <random>
#include <string>
#include <vector>

#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/dataset_io.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/scenario_sampler.hpp"

namespace fdgnn::testing {

inline Scenario sampled_scenario(std::uint64_t seed, TmcMode mode = TmcMode::kReal, int intersections = 8) {
  std::mt19937_64 rng(seed);
  return sample_scenario(rng, SamplingRanges{}, CorridorSpec::uniform(intersections, 600.0), mode,
                         "t" + std::to_string(seed));
}

// Up to n simulated records; scenarios that fail or lack journeys are skipped.
inline Dataset simulated_dataset(std::size_t n, std::uint64_t seed, double window = 900.0) {
  Dataset d;
  d.header.window = window;
  for (std::uint64_t i = 0; d.records.size() < n && i < 4 * n; ++i) {
    const Scenario s = sampled_scenario(derive_seed(seed, i));
    try {
      d.records.push_back(make_record(s, run_scenario(s), Window{s.measurement_start, window}));
    } catch (const DataError&) {
    }
  }
  d.header.record_count = d.records.size();
  return d;
}

}  // namespace fdgnn::testing

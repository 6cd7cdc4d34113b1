#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "fdgnn/corridor.hpp"
#include "fdgnn/graph_builder.hpp"
#include "fdgnn/scenario_sampler.hpp"
#include "fdgnn/trainer.hpp"

namespace fdgnn {

enum class TmcSelection { kReal, kRandom, kMixed };
std::string to_string(TmcSelection t);
TmcSelection tmc_selection_from_string(const std::string& s);
// Mixed alternates real (even index) and random (odd index).
TmcMode tmc_for_index(TmcSelection t, std::size_t index);

struct PipelineConfig {
  CorridorSpec corridor = CorridorSpec::uniform(8, 600.0);
  std::size_t scenarios = 200;
  TmcSelection tmc = TmcSelection::kReal;
  // Feature window length in seconds: 900 or 300.
  double window = 900.0;
  DrvSelection drv = DrvSelection::kLongitudinal;
  SamplingRanges sampling;
  // train.seed always follows `seed`.
  TrainConfig train;
  std::filesystem::path output_dir = "run";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate() const;
  Window feature_window() const { return {sampling.measurement_start, window}; }
};

// Flags given on the command line; each overrides the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> window;
  std::optional<std::string> tmc;
  std::optional<std::filesystem::path> output_dir;
};

PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& c);
// Defaults, then the file (if given), then the overrides; validated.
PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& o);

}  // namespace fdgnn

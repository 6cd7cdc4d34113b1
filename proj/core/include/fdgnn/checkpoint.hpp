#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdgnn/model.hpp"
#include "fdgnn/trainer.hpp"

namespace fdgnn {

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
  TrainConfig config;
  FdgnnModel model;
  TrainingState state;
  // inf, mean, stdv; empty when saved without optimizers.
  std::vector<AdamState> optimizers;
};

// JSON container of named parameter arrays plus everything needed to resume.
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const FdgnnModel& model,
                     const TrainingState& state, const std::vector<AdamState>& optimizers);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_to_string(const TrainConfig& config, const FdgnnModel& model, const TrainingState& state,
                                 const std::vector<AdamState>& optimizers);
Checkpoint checkpoint_from_string(const std::string& text);

}  // namespace fdgnn

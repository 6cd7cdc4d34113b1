#pragma once

// Sequential optimization of the three networks. Each batch runs
//   1. M_x forward on masked static graphs, loss_inf, step optimizer_inf
//   2. dynamic graphs rebuilt from the (detached) step-1 imputations
//   3. loss_mean on M_mu, step optimizer_mean
//   4. loss_stdv on M_sigma, step optimizer_stdv

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdgnn/adam.hpp"
#include "fdgnn/dataset_io.hpp"
#include "fdgnn/model.hpp"

namespace fdgnn {

struct TrainConfig {
  double lr_inf = 1e-3;
  double lr_mean = 1e-3;
  double lr_stdv = 1e-3;
  std::size_t epochs = 50;
  // 0 trains on the whole training split as one batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::array<double, 3> split{0.70, 0.15, 0.15};
  // Stop once this many consecutive epochs fail to improve validation loss; unset disables.
  std::optional<std::size_t> patience;
  // Losses on z-scored targets (train statistics) instead of raw seconds / counts.
  bool standardize_targets = true;
  ModelConfig model;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct Losses {
  double inf = 0.0;
  double mean = 0.0;
  double stdv = 0.0;

  double total() const { return inf + mean + stdv; }
};

struct EpochRow {
  std::size_t epoch = 0;
  Losses train;
  Losses validation;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then contiguous slices with sizes round(n·f_train), round(n·f_val), rest.
DatasetSplit split_dataset(std::size_t record_count, const std::array<double, 3>& fractions, std::uint64_t seed);

std::vector<const DatasetRecord*> select(const Dataset& d, std::span<const std::size_t> indices);

struct Optimizers {
  Adam inf;
  Adam mean;
  Adam stdv;

  Optimizers(const FdgnnModel& model, const TrainConfig& config);
};

enum class TrainStep { kImputation = 1, kMean = 3, kStdv = 4 };

// Runs steps 1-4 on one batch and returns the pre-update losses. `after_step`
// is called right after each optimizer step.
Losses train_batch(FdgnnModel& model, Optimizers& opt, std::span<const DatasetRecord* const> batch,
                   const TrainConfig& config, const std::function<void(TrainStep)>& after_step = {});

// One pass over `records` in a (seed, epoch)-shuffled order. Returns record-weighted mean losses.
Losses train_epoch(FdgnnModel& model, Optimizers& opt, std::span<const DatasetRecord* const> records,
                   const TrainConfig& config, std::size_t epoch);

// Losses of the inference pipeline (imputations feed the dynamic graph) without updating anything.
Losses evaluate_losses(const FdgnnModel& model, std::span<const DatasetRecord* const> records,
                       const TrainConfig& config);

// Indexed inf, mean, stdv. Each network keeps its own best epoch.
using ModuleArray = std::array<double, 3>;

struct TrainingState {
  std::size_t epochs_completed = 0;
  std::vector<EpochRow> history;
  std::array<std::size_t, 3> best_epoch{0, 0, 0};
  ModuleArray best_validation{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
  // Epochs since any network last improved.
  std::size_t stale_epochs = 0;
  bool stopped_early = false;
};

struct TrainReport {
  std::vector<EpochRow> rows;
  std::array<std::size_t, 3> best_epoch{0, 0, 0};
  bool stopped_early = false;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::size_t parameter_count = 0;
};

struct TrainOptions {
  std::filesystem::path output_dir;
  // Continue from a last-epoch checkpoint written by an earlier run.
  std::optional<std::filesystem::path> resume_from;
};

// Writes last.ckpt.json under output_dir after every epoch. best.ckpt.json
// combines each network's parameters from its own lowest-validation epoch.
// Resuming also reads best.ckpt.json from next to the resumed checkpoint.
TrainReport train(const Dataset& dataset, const TrainConfig& config, const TrainOptions& options);

// One row per epoch; columns documented in the README.
void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path);
std::string train_report_csv(const TrainReport& report);

}  // namespace fdgnn

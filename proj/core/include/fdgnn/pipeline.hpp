#pragma once

// The command layer: each cmd_* validates its inputs, reads and writes files
// under the run directory and records artifact hashes in manifest.json.
//
//   <run>/manifest.json
//   <run>/scenarios/<id>.json, <run>/logs/<id>.jsonl
//   <run>/dataset_<tmc>_w<window>.jsonl
//   <run>/train_<tmc>_w<window>/{best,last}.ckpt.json, train_report.csv
//   <run>/eval_<tmc>_w<window>/metrics.csv, baseline_metrics.csv, records.csv, plot_data.jsonl
//   <run>/plots_<tmc>_w<window>/*.svg

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdgnn/evaluation.hpp"
#include "fdgnn/pipeline_config.hpp"
#include "fdgnn/trainer.hpp"

namespace fdgnn {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string tmc_mode;
  std::uint64_t seed = 0;
  // "ok" or "failed".
  std::string status;
  std::string error;
  std::string scenario_sha256;
  std::string log_sha256;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> scenarios;
  // Run-relative path -> sha256.
  std::map<std::string, std::string> artifacts;
};

void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

struct RunLayout {
  std::filesystem::path root;
  std::string variant;

  explicit RunLayout(const PipelineConfig& c);
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path scenario(const std::string& id) const { return root / "scenarios" / (id + ".json"); }
  std::filesystem::path log(const std::string& id) const { return root / "logs" / (id + ".jsonl"); }
  std::filesystem::path dataset() const { return root / ("dataset_" + variant + ".jsonl"); }
  std::filesystem::path train_dir() const { return root / ("train_" + variant); }
  std::filesystem::path eval_dir() const { return root / ("eval_" + variant); }
  std::filesystem::path plot_dir() const { return root / ("plots_" + variant); }
};

std::string scenario_id(std::size_t index);

struct SimulateSummary {
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t reused = 0;
};

// Samples and simulates config.scenarios scenarios on config.jobs threads.
// Scenarios whose files already match the manifest are not re-run.
SimulateSummary cmd_simulate(const PipelineConfig& config);

struct BuildSummary {
  std::size_t records = 0;
  std::size_t excluded = 0;
  std::filesystem::path dataset;
};

BuildSummary cmd_build_dataset(const PipelineConfig& config);

TrainReport cmd_train(const PipelineConfig& config);

struct EvaluateSummary {
  EvaluationResult model;
  EvaluationResult baseline;
  std::size_t parameter_count = 0;
};

// Test split of the checkpoint's own split assignment. Defaults to the
// variant's best checkpoint.
EvaluateSummary cmd_evaluate(const PipelineConfig& config,
                             const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

// Writes {"scenario_id", "mu_east", "sigma_east", "mu_west", "sigma_west",
// "pdf_east", "pdf_west"} as one JSON object.
Prediction cmd_predict(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                       const std::string& scenario_id, std::ostream& out);

// SVGs from the evaluation plot data and the training report. Returns the number of files.
std::size_t cmd_plot(const PipelineConfig& config);

}  // namespace fdgnn

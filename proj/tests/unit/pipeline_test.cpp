#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fdgnn/dataset_io.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/pipeline.hpp"

using namespace fdgnn;
namespace fs = std::filesystem;

namespace {

std::string file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig small_config(const std::string& name, std::size_t scenarios) {
  PipelineConfig c;
  c.output_dir = fs::temp_directory_path() / ("fdgnn_pipeline_" + name);
  fs::remove_all(c.output_dir);
  c.scenarios = scenarios;
  c.train.epochs = 2;
  return c;
}

}  // namespace

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, FlagsOverrideFileOverrideDefaults) {
  const fs::path path = fs::temp_directory_path() / "fdgnn_config_test.json";
  std::ofstream(path) << R"({"seed": 5, "window": 300, "scenarios": 12, "train": {"epochs": 7}})";
  ConfigOverrides o;
  o.seed = 9;
  const PipelineConfig c = load_pipeline_config(path, o);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.window, 300.0);
  EXPECT_EQ(c.scenarios, 12u);
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.tmc, TmcSelection::kReal);
  EXPECT_EQ(load_pipeline_config(std::nullopt, {}).scenarios, PipelineConfig{}.scenarios);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(pipeline_config_from_json(R"({"sceanrios": 3})"), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(R"({"train": {"epochs": 2, "lr": 1}})"), ConfigError);
  EXPECT_THROW(pipeline_config_from_json("{not json"), ConfigError);
  ConfigOverrides o;
  o.window = 600;
  EXPECT_THROW(load_pipeline_config(std::nullopt, o), ConfigError);
  o = {};
  o.tmc = "fake";
  EXPECT_THROW(load_pipeline_config(std::nullopt, o), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig c;
  c.tmc = TmcSelection::kMixed;
  c.train.patience = 4;
  const PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(c));
  EXPECT_EQ(pipeline_config_to_json(back), pipeline_config_to_json(c));
}

TEST(Config, MixedAlternates) {
  EXPECT_EQ(tmc_for_index(TmcSelection::kMixed, 0), TmcMode::kReal);
  EXPECT_EQ(tmc_for_index(TmcSelection::kMixed, 1), TmcMode::kRandom);
  EXPECT_EQ(tmc_for_index(TmcSelection::kRandom, 0), TmcMode::kRandom);
}

TEST(Simulate, ZeroScenariosGiveEmptyManifest) {
  const PipelineConfig c = small_config("empty", 0);
  const SimulateSummary s = cmd_simulate(c);
  EXPECT_EQ(s.completed, 0u);
  EXPECT_TRUE(load_manifest(RunLayout(c).manifest()).scenarios.empty());
}

TEST(Simulate, SameSeedSameHashesAndResume) {
  PipelineConfig a = small_config("hash_a", 4);
  PipelineConfig b = small_config("hash_b", 4);
  b.jobs = 3;
  cmd_simulate(a);
  cmd_simulate(b);
  const Manifest ma = load_manifest(RunLayout(a).manifest());
  const Manifest mb = load_manifest(RunLayout(b).manifest());
  ASSERT_EQ(ma.scenarios.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ma.scenarios[i].scenario_sha256, mb.scenarios[i].scenario_sha256);
    EXPECT_EQ(ma.scenarios[i].log_sha256, mb.scenarios[i].log_sha256);
  }
  EXPECT_EQ(cmd_simulate(a).reused, 4u);
  // A tampered log is re-simulated.
  std::ofstream(RunLayout(a).log(ma.scenarios[2].id), std::ios::app) << "\n";
  EXPECT_EQ(cmd_simulate(a).reused, 3u);
  EXPECT_EQ(file_text(RunLayout(a).log(ma.scenarios[2].id)), file_text(RunLayout(b).log(mb.scenarios[2].id)));
}

TEST(BuildDataset, AccountingAndIdempotence) {
  const PipelineConfig c = small_config("build", 5);
  const SimulateSummary sim = cmd_simulate(c);
  const BuildSummary b = cmd_build_dataset(c);
  EXPECT_EQ(b.records + b.excluded, sim.completed);
  const std::string first = file_text(RunLayout(c).dataset());
  cmd_build_dataset(c);
  EXPECT_EQ(file_text(RunLayout(c).dataset()), first);
  EXPECT_EQ(load_dataset(RunLayout(c).dataset()).records.size(), b.records);
}

TEST(BuildDataset, MissingLogsAreDataErrors) {
  const PipelineConfig c = small_config("nologs", 2);
  EXPECT_THROW(cmd_build_dataset(c), DataError);
  cmd_simulate(c);
  fs::remove(RunLayout(c).log(scenario_id(1)));
  EXPECT_THROW(cmd_build_dataset(c), DataError);
}

TEST(Predict, WritesBothDistributions) {
  PipelineConfig c = small_config("predict", 14);
  cmd_simulate(c);
  cmd_build_dataset(c);
  cmd_train(c);
  const Dataset d = load_dataset(RunLayout(c).dataset());
  std::ostringstream out;
  const Prediction p = cmd_predict(c, RunLayout(c).train_dir() / "best.ckpt.json", d.records[0].scenario_id, out);
  EXPECT_NE(out.str().find("\"pdf_west\""), std::string::npos);
  double mass = 0;
  for (double v : p.pdf_east) mass += v * 10.0;
  if (p.mu_east > 4 * p.sigma_east && p.mu_east + 4 * p.sigma_east < 2500) {
    EXPECT_GT(mass, 0.9);
    EXPECT_LE(mass, 1.0 + 1e-12);
  }
  EXPECT_THROW(cmd_predict(c, RunLayout(c).train_dir() / "best.ckpt.json", "nope", out), DataError);
  const EvaluateSummary e = cmd_evaluate(c);
  EXPECT_EQ(e.model.table.front().n, e.baseline.table.front().n);
  EXPECT_GT(cmd_plot(c), 0u);
}

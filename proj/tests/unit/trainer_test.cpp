#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>

#include <gtest/gtest.h>

#include "fdgnn/checkpoint.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/trainer.hpp"
#include "fixtures.hpp"

using namespace fdgnn;
namespace fs = std::filesystem;

namespace {

const Dataset& dataset() {
  static const Dataset d = fdgnn::testing::simulated_dataset(14, 120);
  return d;
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdgnn_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Split, SeventyFifteenFifteen) {
  const DatasetSplit s = split_dataset(100, {0.7, 0.15, 0.15}, 3);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.validation.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(*all.rbegin(), 99u);
  const DatasetSplit again = split_dataset(100, {0.7, 0.15, 0.15}, 3);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
  EXPECT_NE(split_dataset(100, {0.7, 0.15, 0.15}, 4).train, s.train);
  EXPECT_THROW(split_dataset(9, {0.7, 0.15, 0.15}, 3), DataError);
}

TEST(TrainBatch, ZeroLearningRatesLeaveParametersAlone) {
  const auto& d = dataset();
  TrainConfig cfg;
  cfg.lr_inf = cfg.lr_mean = cfg.lr_stdv = 0.0;
  FdgnnModel model(cfg.model, 1);
  std::vector<const DatasetRecord*> batch;
  for (const auto& r : d.records) batch.push_back(&r);
  model.normalization = fit_normalization(batch);
  Optimizers opt(model, cfg);
  const auto before = snapshot(model.parameters());
  const Losses l = train_batch(model, opt, batch, cfg);
  EXPECT_EQ(snapshot(model.parameters()), before);
  EXPECT_GT(l.inf, 0.0);
  EXPECT_GT(l.mean, 0.0);
  EXPECT_GT(l.stdv, 0.0);
}

TEST(TrainBatch, StepsTouchOnlyTheirOwnNetwork) {
  const auto& d = dataset();
  TrainConfig cfg;
  FdgnnModel model(cfg.model, 2);
  std::vector<const DatasetRecord*> batch;
  for (const auto& r : d.records) batch.push_back(&r);
  model.normalization = fit_normalization(batch);
  Optimizers opt(model, cfg);
  auto mx = snapshot(model.m_x_parameters());
  auto mu = snapshot(model.m_mu_parameters());
  auto sd = snapshot(model.m_sigma_parameters());
  std::vector<int> seen;
  train_batch(model, opt, batch, cfg, [&](TrainStep step) {
    seen.push_back(static_cast<int>(step));
    const auto nx = snapshot(model.m_x_parameters());
    const auto nmu = snapshot(model.m_mu_parameters());
    const auto nsd = snapshot(model.m_sigma_parameters());
    if (step == TrainStep::kImputation) {
      EXPECT_NE(nx, mx);
      EXPECT_EQ(nmu, mu);
      EXPECT_EQ(nsd, sd);
      for (const auto& p : model.m_mu_parameters()) {
        if (auto g = p.grad()) {
          for (double v : *g) EXPECT_EQ(v, 0.0);
        }
      }
    } else if (step == TrainStep::kMean) {
      EXPECT_EQ(nx, mx);
      EXPECT_NE(nmu, mu);
      EXPECT_EQ(nsd, sd);
    } else {
      EXPECT_EQ(nx, mx);
      EXPECT_EQ(nmu, mu);
      EXPECT_NE(nsd, sd);
    }
    mx = nx;
    mu = nmu;
    sd = nsd;
  });
  EXPECT_EQ(seen, (std::vector<int>{1, 3, 4}));
}

TEST(TrainBatch, OverfitsOneRecord) {
  const auto& d = dataset();
  TrainConfig cfg;
  cfg.lr_inf = cfg.lr_mean = cfg.lr_stdv = 3e-3;
  FdgnnModel model(cfg.model, 3);
  const std::vector<const DatasetRecord*> one{&d.records[0]};
  // Statistics from the full set so the single target is not its own mean.
  std::vector<const DatasetRecord*> all;
  for (const auto& r : d.records) all.push_back(&r);
  model.normalization = fit_normalization(all);
  Optimizers opt(model, cfg);
  const Losses first = train_batch(model, opt, one, cfg);
  Losses last;
  for (int i = 1; i < 500; ++i) last = train_batch(model, opt, one, cfg);
  EXPECT_LT(last.inf, 0.01 * first.inf);
  EXPECT_LT(last.mean, 0.01 * first.mean);
  EXPECT_LT(last.stdv, 0.01 * first.stdv);
  const Prediction p = model.predict(d.records[0]);
  EXPECT_NEAR(p.mu_east, d.records[0].target.mu_east, 0.01 * d.records[0].target.mu_east);
  EXPECT_NEAR(p.mu_west, d.records[0].target.mu_west, 0.01 * d.records[0].target.mu_west);
}

TEST(Train, ZeroPatienceStopsAtFirstStaleEpoch) {
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.patience = 0;
  cfg.lr_inf = cfg.lr_mean = cfg.lr_stdv = 0.0;
  const TrainReport r = train(dataset(), cfg, {scratch_dir("patience"), std::nullopt});
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.rows.size(), 2u);
}

TEST(Train, ResumeReproducesUninterruptedRun) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 4;
  const fs::path full_dir = scratch_dir("full");
  const TrainReport full = train(dataset(), cfg, {full_dir, std::nullopt});

  TrainConfig half = cfg;
  half.epochs = 2;
  const fs::path part_dir = scratch_dir("part");
  train(dataset(), half, {part_dir, std::nullopt});
  const TrainReport resumed = train(dataset(), cfg, {part_dir, part_dir / "last.ckpt.json"});

  EXPECT_EQ(train_report_csv(resumed), train_report_csv(full));
  EXPECT_EQ(file_text(full_dir / "best.ckpt.json"), file_text(part_dir / "best.ckpt.json"));
}

TEST(Checkpoint, RoundTripIsLossless) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.patience = 5;
  const fs::path dir = scratch_dir("ckpt");
  train(dataset(), cfg, {dir, std::nullopt});
  const Checkpoint c = load_checkpoint(dir / "last.ckpt.json");
  EXPECT_EQ(c.config, cfg);
  EXPECT_EQ(c.state.epochs_completed, 2u);
  EXPECT_EQ(c.optimizers.size(), 3u);
  const std::string text = checkpoint_to_string(c.config, c.model, c.state, c.optimizers);
  const Checkpoint back = checkpoint_from_string(text);
  EXPECT_EQ(snapshot(back.model.parameters()), snapshot(c.model.parameters()));
  EXPECT_EQ(back.model.normalization, c.model.normalization);
  EXPECT_EQ(checkpoint_to_string(back.config, back.model, back.state, back.optimizers), text);
  EXPECT_THROW(checkpoint_from_string("{\"format\": \"fdgnn-checkpoint\", \"schema_version\": 99}"), DataError);
}

#include "fdgnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fdgnn/checkpoint.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/scenario_sampler.hpp"
#include "json_convert.hpp"

namespace fdgnn {

namespace {

constexpr std::uint64_t kSplitStream = 0x5eed5eedULL;
constexpr std::uint64_t kEpochStream = 0xe90c4ULL;

Tensor column(const Tensor& x, std::size_t c) { return slice_cols(x, c, 1); }

// Targets (graphs×2: east, west) as a constant tensor.
Tensor target_pair(std::span<const DatasetRecord* const> batch, bool sigma) {
  std::vector<double> v;
  for (const DatasetRecord* r : batch) {
    v.push_back(sigma ? r->target.sigma_east : r->target.mu_east);
    v.push_back(sigma ? r->target.sigma_west : r->target.mu_west);
  }
  return Tensor::from({batch.size(), 2}, std::move(v));
}

Tensor standardize(const Tensor& x, double mean, double scale) {
  return add_scalar(mul_scalar(x, 1.0 / scale), -mean / scale);
}

// MSE_east + MSE_west.
Tensor pair_loss(const Tensor& pred, const Tensor& target) {
  return add(mse_loss(column(pred, 0), column(target, 0)), mse_loss(column(pred, 1), column(target, 1)));
}

Tensor imputation_loss(const FdgnnModel& model, const Tensor& imputed, std::span<const DatasetRecord* const> batch,
                       bool standardized) {
  std::vector<double> v;
  for (const DatasetRecord* r : batch) {
    const Matrix s = arterial_columns(r->static_graph.x);
    v.insert(v.end(), s.data().begin(), s.data().end());
  }
  const Tensor truth = Tensor::from({imputed.rows(), imputed.cols()}, std::move(v));
  if (!standardized) return mse_loss(imputed, truth);
  std::array<double, 4> inv{};
  for (std::size_t j = 0; j < inv.size(); ++j) inv[j] = 1.0 / model.normalization.count_scale[j];
  return mse_loss(scale_columns(imputed, inv), scale_columns(truth, inv));
}

std::vector<Matrix> inflow_from(const Tensor& imputed, std::span<const DatasetRecord* const> batch) {
  const auto parts = split_imputations(imputed, batch.size());
  std::vector<Matrix> inflow;
  inflow.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    inflow.push_back(merge_imputation(masked_node_features(batch[i]->static_graph), parts[i]));
  }
  return inflow;
}

Tensor mean_loss(const FdgnnModel& model, const GraphBatch& db, std::span<const DatasetRecord* const> batch,
                 bool standardized) {
  const Tensor pred = model.regress_mu(db);
  const Tensor truth = target_pair(batch, false);
  if (!standardized) return pair_loss(pred, truth);
  const auto& n = model.normalization;
  return pair_loss(standardize(pred, n.mu_mean, n.mu_scale), standardize(truth, n.mu_mean, n.mu_scale));
}

Tensor stdv_loss(const FdgnnModel& model, const GraphBatch& db, std::span<const DatasetRecord* const> batch,
                 bool standardized) {
  const Tensor pred = model.regress_sigma(db);
  const Tensor truth = target_pair(batch, true);
  if (!standardized) return pair_loss(pred, truth);
  const auto& n = model.normalization;
  return pair_loss(standardize(pred, n.sigma_mean, n.sigma_scale),
                   standardize(truth, n.sigma_mean, n.sigma_scale));
}

void check_finite(const Tensor& loss, const char* which, std::span<const DatasetRecord* const> batch) {
  if (std::isfinite(loss.item())) return;
  std::string ids;
  for (std::size_t i = 0; i < batch.size() && i < 8; ++i) ids += (i ? ", " : "") + batch[i]->scenario_id;
  if (batch.size() > 8) ids += ", ...";
  throw NumericError(std::string("non-finite ") + which + " in batch of " + std::to_string(batch.size()) +
                     " records [" + ids + "]");
}

void accumulate(Losses& sum, const Losses& l, double weight) {
  sum.inf += weight * l.inf;
  sum.mean += weight * l.mean;
  sum.stdv += weight * l.stdv;
}

std::vector<AdamState> optimizer_states(const Optimizers& o) { return {o.inf.state(), o.mean.state(), o.stdv.state()}; }

}  // namespace

void TrainConfig::validate() const {
  for (double lr : {lr_inf, lr_mean, lr_stdv}) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train: learning rates must be finite and >= 0");
  }
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  double sum = 0.0;
  for (double f : split) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("train: split fractions must lie in [0, 1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("train: split fractions must sum to 1");
  if (split[0] <= 0.0 || split[1] <= 0.0) throw ConfigError("train: training and validation fractions must be > 0");
}

DatasetSplit split_dataset(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
  if (n < 10) throw DataError("dataset has " + std::to_string(n) + " records; at least 10 are required to split");
  TrainConfig probe;
  probe.split = fractions;
  probe.validate();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, kSplitStream));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[0]));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[1]));
  if (n_train == 0 || n_val == 0 || n_train + n_val > n) throw DataError("split fractions leave an empty split");
  DatasetSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

std::vector<const DatasetRecord*> select(const Dataset& d, std::span<const std::size_t> indices) {
  std::vector<const DatasetRecord*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= d.records.size()) throw DataError("record index " + std::to_string(i) + " out of range");
    out.push_back(&d.records[i]);
  }
  return out;
}

Optimizers::Optimizers(const FdgnnModel& model, const TrainConfig& c)
    : inf(model.m_x_parameters(), AdamOptions{.learning_rate = c.lr_inf}),
      mean(model.m_mu_parameters(), AdamOptions{.learning_rate = c.lr_mean}),
      stdv(model.m_sigma_parameters(), AdamOptions{.learning_rate = c.lr_stdv}) {}

Losses train_batch(FdgnnModel& model, Optimizers& opt, std::span<const DatasetRecord* const> batch,
                   const TrainConfig& config, const std::function<void(TrainStep)>& after_step) {
  if (batch.empty()) throw DataError("train_batch: empty batch");
  const bool z = config.standardize_targets;
  Losses out;

  // Step 1.
  opt.inf.zero_grad();
  const Tensor imputed = model.impute(model.static_batch(batch));
  const Tensor l_inf = imputation_loss(model, imputed, batch, z);
  check_finite(l_inf, "loss_inf", batch);
  out.inf = l_inf.item();
  l_inf.backward();
  opt.inf.step();
  if (after_step) after_step(TrainStep::kImputation);

  // Step 2: imputations enter the dynamic graph as constants.
  const GraphBatch db = model.dynamic_batch(batch, inflow_from(imputed.detach(), batch));

  // Step 3.
  opt.mean.zero_grad();
  const Tensor l_mean = mean_loss(model, db, batch, z);
  check_finite(l_mean, "loss_mean", batch);
  out.mean = l_mean.item();
  l_mean.backward();
  opt.mean.step();
  if (after_step) after_step(TrainStep::kMean);

  // Step 4.
  opt.stdv.zero_grad();
  const Tensor l_stdv = stdv_loss(model, db, batch, z);
  check_finite(l_stdv, "loss_stdv", batch);
  out.stdv = l_stdv.item();
  l_stdv.backward();
  opt.stdv.step();
  if (after_step) after_step(TrainStep::kStdv);
  return out;
}

Losses train_epoch(FdgnnModel& model, Optimizers& opt, std::span<const DatasetRecord* const> records,
                   const TrainConfig& config, std::size_t epoch) {
  if (records.empty()) throw DataError("train_epoch: no training records");
  std::vector<const DatasetRecord*> order(records.begin(), records.end());
  std::mt19937_64 rng(derive_seed(derive_seed(config.seed, kEpochStream), epoch));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bs = config.batch_size == 0 ? order.size() : config.batch_size;
  Losses sum;
  for (std::size_t begin = 0; begin < order.size(); begin += bs) {
    const std::size_t end = std::min(order.size(), begin + bs);
    const std::span<const DatasetRecord* const> batch(order.data() + begin, end - begin);
    accumulate(sum, train_batch(model, opt, batch, config), static_cast<double>(batch.size()));
  }
  const double n = static_cast<double>(order.size());
  return {sum.inf / n, sum.mean / n, sum.stdv / n};
}

Losses evaluate_losses(const FdgnnModel& model, std::span<const DatasetRecord* const> records,
                       const TrainConfig& config) {
  if (records.empty()) throw DataError("evaluate_losses: no records");
  NoGradGuard guard;
  const bool z = config.standardize_targets;
  const std::size_t bs = config.batch_size == 0 ? records.size() : std::max<std::size_t>(config.batch_size, 64);
  Losses sum;
  for (std::size_t begin = 0; begin < records.size(); begin += bs) {
    const std::size_t end = std::min(records.size(), begin + bs);
    const auto batch = records.subspan(begin, end - begin);
    const Tensor imputed = model.impute(model.static_batch(batch));
    const GraphBatch db = model.dynamic_batch(batch, inflow_from(imputed, batch));
    const Losses l{imputation_loss(model, imputed, batch, z).item(), mean_loss(model, db, batch, z).item(),
                   stdv_loss(model, db, batch, z).item()};
    accumulate(sum, l, static_cast<double>(batch.size()));
  }
  const double n = static_cast<double>(records.size());
  return {sum.inf / n, sum.mean / n, sum.stdv / n};
}

TrainReport train(const Dataset& dataset, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (config.model.edge_dim != dataset.header.edge_dim) {
    throw ConfigError("model edge width " + std::to_string(config.model.edge_dim) + " does not match the dataset (" +
                      std::to_string(dataset.header.edge_dim) + ")");
  }
  const DatasetSplit split = split_dataset(dataset.records.size(), config.split, config.seed);
  const auto train_set = select(dataset, split.train);
  const auto val_set = select(dataset, split.validation);

  const auto best_path = options.output_dir / "best.ckpt.json";
  const auto last_path = options.output_dir / "last.ckpt.json";

  FdgnnModel model(config.model, config.seed);
  model.normalization = fit_normalization(train_set);
  FdgnnModel best(config.model, config.seed);
  best.normalization = model.normalization;
  TrainingState state;
  std::vector<AdamState> resume_opt;
  if (options.resume_from) {
    Checkpoint ck = load_checkpoint(*options.resume_from);
    // Extending the epoch budget is the usual reason to resume; everything else must match.
    TrainConfig saved = ck.config;
    saved.epochs = config.epochs;
    if (!(saved == config)) throw ConfigError("resume: checkpoint was trained with a different configuration");
    if (ck.optimizers.size() != 3) throw DataError("resume: checkpoint carries no optimizer state");
    model = std::move(ck.model);
    state = std::move(ck.state);
    resume_opt = std::move(ck.optimizers);
    const auto best_file = options.resume_from->parent_path() / "best.ckpt.json";
    if (std::filesystem::exists(best_file)) best = load_checkpoint(best_file).model;
    spdlog::info("resuming after epoch {}", state.epochs_completed);
  }
  Optimizers opt(model, config);
  if (!resume_opt.empty()) {
    opt.inf.load_state(resume_opt[0]);
    opt.mean.load_state(resume_opt[1]);
    opt.stdv.load_state(resume_opt[2]);
  }
  const std::array<std::vector<Tensor>, 3> live{model.m_x_parameters(), model.m_mu_parameters(),
                                                model.m_sigma_parameters()};
  std::array<std::vector<Tensor>, 3> kept{best.m_x_parameters(), best.m_mu_parameters(),
                                                best.m_sigma_parameters()};

  TrainReport report;
  report.parameter_count = model.parameter_count();
  report.best_checkpoint = best_path;
  report.last_checkpoint = last_path;
  spdlog::info("training on {} records, validating on {}, {} parameters", train_set.size(), val_set.size(),
               report.parameter_count);

  while (state.epochs_completed < config.epochs && !state.stopped_early) {
    const std::size_t epoch = state.epochs_completed + 1;
    const auto t0 = std::chrono::steady_clock::now();
    EpochRow row;
    row.epoch = epoch;
    row.train = train_epoch(model, opt, train_set, config, epoch);
    row.validation = evaluate_losses(model, val_set, config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("epoch {:3d}  train inf {:.4f} mean {:.4f} stdv {:.4f}  val inf {:.4f} mean {:.4f} stdv {:.4f}  {:.1f}s",
                 epoch, row.train.inf, row.train.mean, row.train.stdv, row.validation.inf, row.validation.mean,
                 row.validation.stdv, secs);
    state.history.push_back(row);
    state.epochs_completed = epoch;
    const ModuleArray val{row.validation.inf, row.validation.mean, row.validation.stdv};
    bool improved = false;
    for (std::size_t m = 0; m < 3; ++m) {
      if (!(val[m] < state.best_validation[m])) continue;
      improved = true;
      state.best_validation[m] = val[m];
      state.best_epoch[m] = epoch;
      for (std::size_t k = 0; k < live[m].size(); ++k) {
        const auto src = live[m][k].values();
        std::copy(src.begin(), src.end(), kept[m][k].mutable_values().begin());
      }
    }
    if (improved) {
      state.stale_epochs = 0;
    } else {
      ++state.stale_epochs;
      if (config.patience && state.stale_epochs > *config.patience) state.stopped_early = true;
    }
    if (improved) save_checkpoint(best_path, config, best, state, {});
    save_checkpoint(last_path, config, model, state, optimizer_states(opt));
    if (state.stopped_early) spdlog::info("no validation improvement for {} epochs, stopping", state.stale_epochs);
  }
  report.rows = state.history;
  report.best_epoch = state.best_epoch;
  report.stopped_early = state.stopped_early;
  return report;
}

std::string train_report_csv(const TrainReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss_inf,train_loss_mean,train_loss_stdv,val_loss_inf,val_loss_mean,val_loss_stdv,"
         "best_inf,best_mean,best_stdv\n";
  const auto& b = report.best_epoch;
  for (const auto& r : report.rows) {
    out << r.epoch << ',' << r.train.inf << ',' << r.train.mean << ',' << r.train.stdv << ',' << r.validation.inf
        << ',' << r.validation.mean << ',' << r.validation.stdv << ',' << (r.epoch == b[0]) << ','
        << (r.epoch == b[1]) << ',' << (r.epoch == b[2]) << '\n';
  }
  return out.str();
}

void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path) {
  jsonio::write_file(path, train_report_csv(report));
}

}  // namespace fdgnn

#include "fdgnn/checkpoint.hpp"

#include <cmath>
#include <map>

#include "json_convert.hpp"

namespace fdgnn {

using jsonio::check_keys;
using jsonio::read;

void to_json(json& j, const ModelConfig& c) {
  j = json{{"edge_dim", c.edge_dim}, {"mx_hidden", c.mx_hidden},     {"mx_heads", c.mx_heads},
           {"hidden", c.hidden},     {"heads", c.heads},             {"edge_hidden", c.edge_hidden},
           {"fc_hidden", c.fc_hidden}};
}

void from_json(const json& j, ModelConfig& c) {
  const std::string ctx = "model";
  check_keys(j, {"edge_dim", "mx_hidden", "mx_heads", "hidden", "heads", "edge_hidden", "fc_hidden"}, ctx);
  read(j, "edge_dim", c.edge_dim, ctx);
  read(j, "mx_hidden", c.mx_hidden, ctx);
  read(j, "mx_heads", c.mx_heads, ctx);
  read(j, "hidden", c.hidden, ctx);
  read(j, "heads", c.heads, ctx);
  read(j, "edge_hidden", c.edge_hidden, ctx);
  read(j, "fc_hidden", c.fc_hidden, ctx);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr_inf", c.lr_inf},
           {"lr_mean", c.lr_mean},
           {"lr_stdv", c.lr_stdv},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"split", c.split},
           {"patience", c.patience ? json(*c.patience) : json(nullptr)},
           {"standardize_targets", c.standardize_targets},
           {"model", c.model}};
}

void from_json(const json& j, TrainConfig& c) {
  const std::string ctx = "train";
  check_keys(j, {"lr_inf", "lr_mean", "lr_stdv", "epochs", "batch_size", "seed", "split", "patience",
                 "standardize_targets", "model"},
             ctx);
  read(j, "lr_inf", c.lr_inf, ctx);
  read(j, "lr_mean", c.lr_mean, ctx);
  read(j, "lr_stdv", c.lr_stdv, ctx);
  read(j, "epochs", c.epochs, ctx);
  read(j, "batch_size", c.batch_size, ctx);
  read(j, "seed", c.seed, ctx);
  read(j, "split", c.split, ctx);
  if (auto it = j.find("patience"); it != j.end()) {
    if (it->is_null()) {
      c.patience.reset();
    } else {
      std::size_t p = 0;
      read(j, "patience", p, ctx);
      c.patience = p;
    }
  }
  read(j, "standardize_targets", c.standardize_targets, ctx);
  read(j, "model", c.model, ctx);
}

namespace {

json stats_json(const ColumnStats& s) { return json{{"mean", s.mean}, {"scale", s.scale}}; }

ColumnStats stats_from(const json& j, const std::string& ctx) {
  check_keys(j, {"mean", "scale"}, ctx);
  ColumnStats s{jsonio::required<std::vector<double>>(j, "mean", ctx),
                jsonio::required<std::vector<double>>(j, "scale", ctx)};
  if (s.mean.size() != s.scale.size()) throw DataError(ctx + ": mean and scale lengths differ");
  for (double v : s.scale) {
    if (!(v > 0.0)) throw DataError(ctx + ": scales must be positive");
  }
  return s;
}

json normalization_json(const Normalization& n) {
  return json{{"static_node", stats_json(n.static_node)},
              {"static_edge", stats_json(n.static_edge)},
              {"dynamic_node", stats_json(n.dynamic_node)},
              {"dynamic_edge", stats_json(n.dynamic_edge)},
              {"count_scale", n.count_scale},
              {"mu_mean", n.mu_mean},
              {"mu_scale", n.mu_scale},
              {"sigma_mean", n.sigma_mean},
              {"sigma_scale", n.sigma_scale}};
}

Normalization normalization_from(const json& j) {
  const std::string ctx = "normalization";
  check_keys(j, {"static_node", "static_edge", "dynamic_node", "dynamic_edge", "count_scale", "mu_mean", "mu_scale",
                 "sigma_mean", "sigma_scale"},
             ctx);
  Normalization n;
  n.static_node = stats_from(j.at("static_node"), ctx + ".static_node");
  n.static_edge = stats_from(j.at("static_edge"), ctx + ".static_edge");
  n.dynamic_node = stats_from(j.at("dynamic_node"), ctx + ".dynamic_node");
  n.dynamic_edge = stats_from(j.at("dynamic_edge"), ctx + ".dynamic_edge");
  n.count_scale = jsonio::required<std::array<double, 4>>(j, "count_scale", ctx);
  n.mu_mean = jsonio::required<double>(j, "mu_mean", ctx);
  n.mu_scale = jsonio::required<double>(j, "mu_scale", ctx);
  n.sigma_mean = jsonio::required<double>(j, "sigma_mean", ctx);
  n.sigma_scale = jsonio::required<double>(j, "sigma_scale", ctx);
  return n;
}

json losses_json(const Losses& l) { return json{{"inf", l.inf}, {"mean", l.mean}, {"stdv", l.stdv}}; }

Losses losses_from(const json& j) {
  return {jsonio::required<double>(j, "inf", "losses"), jsonio::required<double>(j, "mean", "losses"),
          jsonio::required<double>(j, "stdv", "losses")};
}

json state_json(const TrainingState& s) {
  json best = json::array();
  for (double v : s.best_validation) best.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  json history = json::array();
  for (const auto& r : s.history) {
    history.push_back(json{{"epoch", r.epoch}, {"train", losses_json(r.train)}, {"validation", losses_json(r.validation)}});
  }
  return json{{"epochs_completed", s.epochs_completed},
              {"history", history},
              {"best_epoch", s.best_epoch},
              {"best_validation", best},
              {"stale_epochs", s.stale_epochs},
              {"stopped_early", s.stopped_early}};
}

TrainingState state_from(const json& j) {
  const std::string ctx = "state";
  TrainingState s;
  s.epochs_completed = jsonio::required<std::size_t>(j, "epochs_completed", ctx);
  for (const auto& r : j.at("history")) {
    s.history.push_back({jsonio::required<std::size_t>(r, "epoch", "history"), losses_from(r.at("train")),
                         losses_from(r.at("validation"))});
  }
  s.best_epoch = jsonio::required<std::array<std::size_t, 3>>(j, "best_epoch", ctx);
  const json& best = j.at("best_validation");
  if (!best.is_array() || best.size() != 3) throw DataError("state.best_validation: expected 3 entries");
  for (std::size_t m = 0; m < 3; ++m) {
    if (!best[m].is_null()) s.best_validation[m] = best[m].get<double>();
  }
  s.stale_epochs = jsonio::required<std::size_t>(j, "stale_epochs", ctx);
  s.stopped_early = jsonio::required<bool>(j, "stopped_early", ctx);
  return s;
}

json adam_json(const AdamState& a) {
  return json{{"learning_rate", a.options.learning_rate},
              {"beta1", a.options.beta1},
              {"beta2", a.options.beta2},
              {"epsilon", a.options.epsilon},
              {"step", a.step},
              {"first_moment", a.first_moment},
              {"second_moment", a.second_moment}};
}

AdamState adam_from(const json& j) {
  const std::string ctx = "optimizer";
  AdamState a;
  a.options.learning_rate = jsonio::required<double>(j, "learning_rate", ctx);
  a.options.beta1 = jsonio::required<double>(j, "beta1", ctx);
  a.options.beta2 = jsonio::required<double>(j, "beta2", ctx);
  a.options.epsilon = jsonio::required<double>(j, "epsilon", ctx);
  a.step = jsonio::required<std::int64_t>(j, "step", ctx);
  a.first_moment = jsonio::required<std::vector<std::vector<double>>>(j, "first_moment", ctx);
  a.second_moment = jsonio::required<std::vector<std::vector<double>>>(j, "second_moment", ctx);
  return a;
}

}  // namespace

std::string checkpoint_to_string(const TrainConfig& config, const FdgnnModel& model, const TrainingState& state,
                                 const std::vector<AdamState>& optimizers) {
  json params = json::array();
  for (const auto& p : model.parameters()) {
    auto v = p.values();
    params.push_back(json{{"name", p.name()}, {"shape", p.shape()}, {"values", std::vector<double>(v.begin(), v.end())}});
  }
  json opt = json::array();
  for (const auto& a : optimizers) opt.push_back(adam_json(a));
  const json j{{"format", "fdgnn-checkpoint"},
               {"schema_version", kCheckpointSchemaVersion},
               {"config", config},
               {"normalization", normalization_json(model.normalization)},
               {"parameters", params},
               {"optimizers", opt},
               {"state", state_json(state)}};
  return j.dump();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), e.byte, -1);
  }
  check_keys(j, {"format", "schema_version", "config", "normalization", "parameters", "optimizers", "state"},
             "checkpoint");
  if (jsonio::required<std::string>(j, "format", "checkpoint") != "fdgnn-checkpoint") {
    throw DataError("not an fdgnn checkpoint");
  }
  const int version = jsonio::required<int>(j, "schema_version", "checkpoint");
  if (version != kCheckpointSchemaVersion) {
    throw DataError("unsupported checkpoint schema version " + std::to_string(version));
  }
  TrainConfig config;
  from_json(j.at("config"), config);
  Checkpoint ck{config, FdgnnModel(config.model, config.seed), state_from(j.at("state")), {}};
  ck.model.normalization = normalization_from(j.at("normalization"));

  std::map<std::string, const json*> stored;
  for (const auto& p : j.at("parameters")) stored[jsonio::required<std::string>(p, "name", "parameter")] = &p;
  auto params = ck.model.parameters();
  if (stored.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(stored.size()) + " parameters, model expects " +
                    std::to_string(params.size()));
  }
  for (auto& p : params) {
    auto it = stored.find(p.name());
    if (it == stored.end()) throw DataError("checkpoint is missing parameter '" + p.name() + "'");
    const auto shape = jsonio::required<Shape>(*it->second, "shape", p.name());
    const auto values = jsonio::required<std::vector<double>>(*it->second, "values", p.name());
    if (shape != p.shape() || values.size() != p.numel()) {
      throw DataError("checkpoint parameter '" + p.name() + "' has shape " + shape_to_string(shape) + ", expected " +
                      shape_to_string(p.shape()));
    }
    std::copy(values.begin(), values.end(), p.mutable_values().begin());
  }
  for (const auto& a : j.at("optimizers")) ck.optimizers.push_back(adam_from(a));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const FdgnnModel& model,
                     const TrainingState& state, const std::vector<AdamState>& optimizers) {
  jsonio::write_file(path, checkpoint_to_string(config, model, state, optimizers));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_string(jsonio::read_file(path));
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace fdgnn

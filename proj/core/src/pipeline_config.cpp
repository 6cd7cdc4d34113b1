#include "fdgnn/pipeline_config.hpp"

#include "json_convert.hpp"

namespace fdgnn {

using jsonio::check_keys;
using jsonio::read;

void to_json(json& j, const Range& r) { j = json::array({r.lo, r.hi}); }

void from_json(const json& j, Range& r) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError("range: expected [lo, hi]");
  }
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

namespace {

json sampling_json(const SamplingRanges& r) {
  return json{{"cycle", r.cycle},
              {"yellow", r.yellow},
              {"all_red", r.all_red},
              {"min_green_left", r.min_green_left},
              {"min_green_through", r.min_green_through},
              {"left_share", r.left_share},
              {"accel", r.accel},
              {"decel", r.decel},
              {"emergency_decel", r.emergency_decel},
              {"min_gap", r.min_gap},
              {"sigma", r.sigma},
              {"tau", r.tau},
              {"lc_strategic", r.lc_strategic},
              {"lc_cooperative", r.lc_cooperative},
              {"lc_speed_gain", r.lc_speed_gain},
              {"speed_factor_mean", r.speed_factor_mean},
              {"speed_factor_stdev", r.speed_factor_stdev},
              {"arterial_demand", r.arterial_demand},
              {"side_demand", r.side_demand},
              {"duration", r.duration},
              {"measurement_start", r.measurement_start},
              {"measurement_length", r.measurement_length}};
}

void sampling_from(const json& j, SamplingRanges& r) {
  const std::string ctx = "sampling";
  check_keys(j, {"cycle", "yellow", "all_red", "min_green_left", "min_green_through", "left_share", "accel", "decel",
                 "emergency_decel", "min_gap", "sigma", "tau", "lc_strategic", "lc_cooperative", "lc_speed_gain",
                 "speed_factor_mean", "speed_factor_stdev", "arterial_demand", "side_demand", "duration",
                 "measurement_start", "measurement_length"},
             ctx);
  read(j, "cycle", r.cycle, ctx);
  read(j, "yellow", r.yellow, ctx);
  read(j, "all_red", r.all_red, ctx);
  read(j, "min_green_left", r.min_green_left, ctx);
  read(j, "min_green_through", r.min_green_through, ctx);
  read(j, "left_share", r.left_share, ctx);
  read(j, "accel", r.accel, ctx);
  read(j, "decel", r.decel, ctx);
  read(j, "emergency_decel", r.emergency_decel, ctx);
  read(j, "min_gap", r.min_gap, ctx);
  read(j, "sigma", r.sigma, ctx);
  read(j, "tau", r.tau, ctx);
  read(j, "lc_strategic", r.lc_strategic, ctx);
  read(j, "lc_cooperative", r.lc_cooperative, ctx);
  read(j, "lc_speed_gain", r.lc_speed_gain, ctx);
  read(j, "speed_factor_mean", r.speed_factor_mean, ctx);
  read(j, "speed_factor_stdev", r.speed_factor_stdev, ctx);
  read(j, "arterial_demand", r.arterial_demand, ctx);
  read(j, "side_demand", r.side_demand, ctx);
  read(j, "duration", r.duration, ctx);
  read(j, "measurement_start", r.measurement_start, ctx);
  read(j, "measurement_length", r.measurement_length, ctx);
}

void merge_config(PipelineConfig& c, const json& j) {
  const std::string ctx = "config";
  check_keys(j, {"corridor", "scenarios", "tmc", "window", "drv", "sampling", "train", "output_dir", "seed", "jobs"},
             ctx);
  read(j, "corridor", c.corridor, ctx);
  read(j, "scenarios", c.scenarios, ctx);
  if (j.contains("tmc")) {
    std::string t;
    read(j, "tmc", t, ctx);
    c.tmc = tmc_selection_from_string(t);
  }
  read(j, "window", c.window, ctx);
  if (j.contains("drv")) {
    std::string d;
    read(j, "drv", d, ctx);
    c.drv = drv_selection_from_string(d);
  }
  if (j.contains("sampling")) sampling_from(j.at("sampling"), c.sampling);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("output_dir")) {
    std::string p;
    read(j, "output_dir", p, ctx);
    c.output_dir = p;
  }
  read(j, "seed", c.seed, ctx);
  read(j, "jobs", c.jobs, ctx);
}

}  // namespace

std::string to_string(TmcSelection t) {
  switch (t) {
    case TmcSelection::kReal: return "real";
    case TmcSelection::kRandom: return "random";
    case TmcSelection::kMixed: return "mixed";
  }
  return "?";
}

TmcSelection tmc_selection_from_string(const std::string& s) {
  if (s == "real") return TmcSelection::kReal;
  if (s == "random") return TmcSelection::kRandom;
  if (s == "mixed") return TmcSelection::kMixed;
  throw ConfigError("tmc must be one of real, random, mixed (got '" + s + "')");
}

TmcMode tmc_for_index(TmcSelection t, std::size_t index) {
  switch (t) {
    case TmcSelection::kReal: return TmcMode::kReal;
    case TmcSelection::kRandom: return TmcMode::kRandom;
    case TmcSelection::kMixed: return index % 2 == 0 ? TmcMode::kReal : TmcMode::kRandom;
  }
  return TmcMode::kReal;
}

void PipelineConfig::validate() const {
  if (corridor.intersections < 2) throw ConfigError("corridor needs at least 2 intersections");
  const auto n = static_cast<std::size_t>(corridor.intersections - 1);
  if (corridor.segment_east.size() != n || corridor.segment_west.size() != n) {
    throw ConfigError("corridor needs " + std::to_string(n) + " segment lengths per direction");
  }
  if (window != 900.0 && window != 300.0) throw ConfigError("window must be 300 or 900 seconds");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (sampling.measurement_start + window > sampling.duration) {
    throw ConfigError("feature window ends after the simulation duration");
  }
  if (train.model.edge_dim != edge_feature_dim(drv)) {
    throw ConfigError("train.model.edge_dim " + std::to_string(train.model.edge_dim) + " does not match drv '" +
                      to_string(drv) + "' (" + std::to_string(edge_feature_dim(drv)) + ")");
  }
  ::fdgnn::validate(sampling);
  train.validate();
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  merge_config(c, j);
  // Edge width follows the drv selection unless the file pins it.
  if (!(j.contains("train") && j["train"].contains("model") && j["train"]["model"].contains("edge_dim"))) {
    c.train.model.edge_dim = edge_feature_dim(c.drv);
  }
  c.train.seed = c.seed;
  return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json j{{"corridor", c.corridor},
         {"scenarios", c.scenarios},
         {"tmc", to_string(c.tmc)},
         {"window", c.window},
         {"drv", to_string(c.drv)},
         {"sampling", sampling_json(c.sampling)},
         {"train", c.train},
         {"output_dir", c.output_dir.string()},
         {"seed", c.seed},
         {"jobs", c.jobs}};
  return j.dump(2);
}

PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& o) {
  PipelineConfig c;
  if (path) {
    std::string text;
    try {
      text = jsonio::read_file(*path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    c = pipeline_config_from_json(text);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.window) c.window = *o.window;
  if (o.tmc) c.tmc = tmc_selection_from_string(*o.tmc);
  if (o.output_dir) c.output_dir = *o.output_dir;
  c.train.seed = c.seed;
  c.validate();
  return c;
}

}  // namespace fdgnn

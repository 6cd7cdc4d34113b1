#include "fdgnn/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "fdgnn/checkpoint.hpp"
#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/dataset_io.hpp"
#include "fdgnn/scenario_io.hpp"
#include "fdgnn/scenario_sampler.hpp"
#include "fdgnn/svg_plot.hpp"
#include "json_convert.hpp"

namespace fdgnn {

namespace {

// Runs body(i) for i in [0, n) on `jobs` threads. The first exception (by
// index) is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(jobs, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string run_relative(const std::filesystem::path& p, const std::filesystem::path& root) {
  return p.lexically_relative(root).generic_string();
}

Manifest manifest_or_empty(const RunLayout& run, std::uint64_t seed) {
  if (std::filesystem::exists(run.manifest())) return load_manifest(run.manifest());
  Manifest m;
  m.seed = seed;
  return m;
}

void record_artifacts(const RunLayout& run, std::uint64_t seed, const std::vector<std::filesystem::path>& files) {
  Manifest m = manifest_or_empty(run, seed);
  for (const auto& f : files) m.artifacts[run_relative(f, run.root)] = sha256_file(f);
  save_manifest(m, run.manifest());
}

Dataset load_variant_dataset(const RunLayout& run) {
  if (!std::filesystem::exists(run.dataset())) {
    throw DataError("dataset " + run.dataset().string() + " not found; run build-dataset first");
  }
  return load_dataset(run.dataset());
}

std::string per_record_csv(const std::vector<RecordMetrics>& records) {
  std::ostringstream o;
  o.precision(10);
  o << "scenario_id,direction,mape,std,hld,nrmse\n";
  for (const auto& r : records) {
    const std::pair<const char*, const DirectionMetrics*> dirs[] = {{"east", &r.east}, {"west", &r.west}};
    for (const auto& [name, m] : dirs) {
      o << r.scenario_id << ',' << name << ',' << m->mape << ',' << m->std << ',' << m->hld << ',' << m->nrmse << '\n';
    }
  }
  return o.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(jsonio::read_file(path)); }

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& e : m.scenarios) {
    entries.push_back(json{{"id", e.id},
                           {"tmc_mode", e.tmc_mode},
                           {"seed", e.seed},
                           {"status", e.status},
                           {"error", e.error},
                           {"scenario_sha256", e.scenario_sha256},
                           {"log_sha256", e.log_sha256}});
  }
  const json j{{"format", "fdgnn-manifest"}, {"seed", m.seed}, {"scenarios", entries}, {"artifacts", m.artifacts}};
  jsonio::write_file(path, j.dump(2) + "\n");
}

Manifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(jsonio::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("manifest: " + std::string(e.what()), e.byte, -1);
  }
  if (jsonio::required<std::string>(j, "format", "manifest") != "fdgnn-manifest") {
    throw DataError(path.string() + " is not a run manifest");
  }
  Manifest m;
  m.seed = jsonio::required<std::uint64_t>(j, "seed", "manifest");
  for (const auto& e : j.at("scenarios")) {
    ManifestEntry x;
    x.id = jsonio::required<std::string>(e, "id", "manifest entry");
    x.tmc_mode = jsonio::required<std::string>(e, "tmc_mode", "manifest entry");
    x.seed = jsonio::required<std::uint64_t>(e, "seed", "manifest entry");
    x.status = jsonio::required<std::string>(e, "status", "manifest entry");
    x.error = jsonio::required<std::string>(e, "error", "manifest entry");
    x.scenario_sha256 = jsonio::required<std::string>(e, "scenario_sha256", "manifest entry");
    x.log_sha256 = jsonio::required<std::string>(e, "log_sha256", "manifest entry");
    m.scenarios.push_back(std::move(x));
  }
  m.artifacts = jsonio::required<std::map<std::string, std::string>>(j, "artifacts", "manifest");
  return m;
}

RunLayout::RunLayout(const PipelineConfig& c)
    : root(c.output_dir), variant(to_string(c.tmc) + "_w" + std::to_string(static_cast<int>(c.window))) {}

std::string scenario_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", index);
  return buf;
}

SimulateSummary cmd_simulate(const PipelineConfig& config) {
  config.validate();
  const RunLayout run(config);
  std::filesystem::create_directories(run.root / "scenarios");
  std::filesystem::create_directories(run.root / "logs");

  std::map<std::string, ManifestEntry> previous;
  if (std::filesystem::exists(run.manifest())) {
    for (auto& e : load_manifest(run.manifest()).scenarios) previous[e.id] = e;
  }

  std::vector<ManifestEntry> entries(config.scenarios);
  std::vector<char> reused(config.scenarios, 0);
  std::mutex log_mutex;
  parallel_for(config.scenarios, config.jobs, [&](std::size_t i) {
    ManifestEntry& e = entries[i];
    e.id = scenario_id(i);
    e.seed = derive_seed(config.seed, i);
    const TmcMode mode = tmc_for_index(config.tmc, i);
    e.tmc_mode = to_string(mode);
    std::mt19937_64 rng(e.seed);
    const Scenario s = sample_scenario(rng, config.sampling, config.corridor, mode, e.id);
    const std::string text = scenario_to_json(s);
    e.scenario_sha256 = sha256_hex(text);

    if (auto it = previous.find(e.id); it != previous.end() && it->second.scenario_sha256 == e.scenario_sha256 &&
                                       std::filesystem::exists(run.scenario(e.id))) {
      const ManifestEntry& p = it->second;
      const bool log_ok = p.status == "ok" && std::filesystem::exists(run.log(e.id)) &&
                          sha256_file(run.log(e.id)) == p.log_sha256;
      if (log_ok || p.status == "failed") {
        e = p;
        reused[i] = 1;
        return;
      }
    }
    jsonio::write_file(run.scenario(e.id), text);
    try {
      const SimulationLog log = run_scenario(s);
      save_simulation_log(log, run.log(e.id));
      e.status = "ok";
      e.log_sha256 = sha256_file(run.log(e.id));
    } catch (const SimulationError& err) {
      e.status = "failed";
      e.error = err.what();
      std::error_code ec;
      std::filesystem::remove(run.log(e.id), ec);
      std::lock_guard lock(log_mutex);
      spdlog::warn("{}: simulation failed: {}", e.id, err.what());
    }
  });

  Manifest m = manifest_or_empty(run, config.seed);
  m.seed = config.seed;
  m.scenarios = entries;
  save_manifest(m, run.manifest());

  SimulateSummary summary;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (reused[i]) ++summary.reused;
    if (entries[i].status == "ok") {
      ++summary.completed;
    } else {
      ++summary.failed;
    }
  }
  spdlog::info("simulate: {} completed ({} reused), {} failed, manifest {}", summary.completed, summary.reused,
               summary.failed, run.manifest().string());
  return summary;
}

BuildSummary cmd_build_dataset(const PipelineConfig& config) {
  config.validate();
  const RunLayout run(config);
  if (!std::filesystem::exists(run.manifest())) {
    throw DataError("no manifest at " + run.manifest().string() + "; run simulate first");
  }
  const Manifest m = load_manifest(run.manifest());
  std::vector<const ManifestEntry*> ok;
  for (const auto& e : m.scenarios)
    if (e.status == "ok") ok.push_back(&e);

  std::vector<std::optional<DatasetRecord>> built(ok.size());
  std::vector<std::string> reasons(ok.size());
  parallel_for(ok.size(), config.jobs, [&](std::size_t i) {
    const ManifestEntry& e = *ok[i];
    if (!std::filesystem::exists(run.log(e.id))) throw DataError("missing simulation log " + run.log(e.id).string());
    const Scenario s = load_scenario(run.scenario(e.id));
    const SimulationLog log = load_simulation_log(run.log(e.id));
    try {
      built[i] = make_record(s, log, config.feature_window(), config.drv);
    } catch (const InsufficientDataError& err) {
      reasons[i] = err.what();
    }
  });

  Dataset d;
  d.header.intersections = static_cast<std::size_t>(config.corridor.intersections);
  d.header.edge_dim = edge_feature_dim(config.drv);
  d.header.window = config.window;
  d.header.tmc_mode = to_string(config.tmc);
  d.header.drv = config.drv;
  BuildSummary summary;
  for (std::size_t i = 0; i < built.size(); ++i) {
    if (built[i]) {
      d.records.push_back(std::move(*built[i]));
    } else {
      ++summary.excluded;
      spdlog::warn("{}: excluded ({})", ok[i]->id, reasons[i]);
    }
  }
  d.header.record_count = d.records.size();
  save_dataset(d, run.dataset());
  summary.records = d.records.size();
  summary.dataset = run.dataset();
  record_artifacts(run, config.seed, {run.dataset()});

  double mu_e = 0, mu_w = 0, sd_e = 0, sd_w = 0;
  for (const auto& r : d.records) {
    mu_e += r.target.mu_east;
    mu_w += r.target.mu_west;
    sd_e += r.target.sigma_east;
    sd_w += r.target.sigma_west;
  }
  const double n = std::max<double>(1.0, static_cast<double>(d.records.size()));
  spdlog::info("build-dataset: {} records, {} excluded, {} failed simulations -> {}", summary.records,
               summary.excluded, m.scenarios.size() - ok.size(), run.dataset().string());
  spdlog::info("targets: mean mu east {:.1f} s west {:.1f} s, mean sigma east {:.1f} s west {:.1f} s", mu_e / n,
               mu_w / n, sd_e / n, sd_w / n);
  return summary;
}

TrainReport cmd_train(const PipelineConfig& config) {
  config.validate();
  const RunLayout run(config);
  const Dataset d = load_variant_dataset(run);
  const TrainReport report = train(d, config.train, {run.train_dir(), std::nullopt});
  const auto csv = run.train_dir() / "train_report.csv";
  write_train_report_csv(report, csv);
  record_artifacts(run, config.seed, {csv, report.best_checkpoint});
  spdlog::info("train: {} parameters (the reference architecture reports 59K), best epochs inf {} mean {} stdv {}",
               report.parameter_count, report.best_epoch[0], report.best_epoch[1], report.best_epoch[2]);
  return report;
}

EvaluateSummary cmd_evaluate(const PipelineConfig& config, const std::optional<std::filesystem::path>& checkpoint) {
  config.validate();
  const RunLayout run(config);
  const auto ck_path = checkpoint.value_or(run.train_dir() / "best.ckpt.json");
  const Checkpoint ck = load_checkpoint(ck_path);
  const Dataset d = load_variant_dataset(run);
  if (d.header.edge_dim != ck.config.model.edge_dim) {
    throw DataError("checkpoint edge width does not match dataset " + run.dataset().string());
  }
  const DatasetSplit split = split_dataset(d.records.size(), ck.config.split, ck.config.seed);
  const auto test = select(d, split.test);
  const auto train_set = select(d, split.train);

  EvaluateSummary out;
  out.parameter_count = ck.model.parameter_count();
  out.model = evaluate(test, model_predictor(ck.model));
  out.baseline = evaluate(test, mean_baseline(train_set));

  const auto dir = run.eval_dir();
  jsonio::write_file(dir / "metrics.csv", metric_table_csv(out.model.table));
  jsonio::write_file(dir / "baseline_metrics.csv", metric_table_csv(out.baseline.table));
  jsonio::write_file(dir / "records.csv", per_record_csv(out.model.records));
  jsonio::write_file(dir / "plot_data.jsonl", plot_data_jsonl(test, out.model.predictions));
  record_artifacts(run, config.seed, {dir / "metrics.csv", dir / "baseline_metrics.csv", dir / "records.csv"});

  const MetricRow& t = out.model.table.front();
  const MetricRow& b = out.baseline.table.front();
  spdlog::info("evaluate: {} test records; combined MAPE {:.4g} STD {:.3f} HLD {:.4f} NRMSE {:.4f}", t.n,
               t.combined.mape, t.combined.std, t.combined.hld, t.combined.nrmse);
  spdlog::info("baseline (train mean): MAPE {:.4g} STD {:.3f} HLD {:.4f} NRMSE {:.4f}", b.combined.mape,
               b.combined.std, b.combined.hld, b.combined.nrmse);
  return out;
}

Prediction cmd_predict(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                       const std::string& id, std::ostream& out) {
  config.validate();
  const RunLayout run(config);
  const Checkpoint ck = load_checkpoint(checkpoint);
  const Dataset d = load_variant_dataset(run);
  const DatasetRecord* record = nullptr;
  for (const auto& r : d.records)
    if (r.scenario_id == id) record = &r;
  if (!record) throw DataError("scenario '" + id + "' is not in " + run.dataset().string());
  if (record->dynamic_graph.e.cols() != ck.config.model.edge_dim) {
    throw DataError("checkpoint edge width does not match the dataset");
  }
  const Prediction p = ck.model.predict(*record);
  nlohmann::ordered_json j;
  j["scenario_id"] = id;
  j["mu_east"] = p.mu_east;
  j["sigma_east"] = p.sigma_east;
  j["mu_west"] = p.mu_west;
  j["sigma_west"] = p.sigma_west;
  j["pdf_east"] = p.pdf_east;
  j["pdf_west"] = p.pdf_west;
  out << j.dump() << '\n';
  return p;
}

std::size_t cmd_plot(const PipelineConfig& config) {
  config.validate();
  const RunLayout run(config);
  const auto data = run.eval_dir() / "plot_data.jsonl";
  if (!std::filesystem::exists(data)) throw DataError("no plot data at " + data.string() + "; run evaluate first");
  std::filesystem::create_directories(run.plot_dir());
  std::size_t written = 0;
  std::istringstream in(jsonio::read_file(data));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const auto id = j.at("scenario_id").get<std::string>();
    for (const char* dir : {"east", "west"}) {
      const std::string d(dir);
      const auto actual = j.at("pdf_" + d + "_actual").get<std::vector<double>>();
      const auto predicted = j.at("pdf_" + d + "_predicted").get<std::vector<double>>();
      jsonio::write_file(run.plot_dir() / (id + "_" + d + ".svg"),
                         pdf_comparison_svg(id + " " + d + "bound travel time", actual, predicted));
      ++written;
    }
  }
  const auto report = run.train_dir() / "last.ckpt.json";
  if (std::filesystem::exists(report)) {
    const TrainingState st = load_checkpoint(report).state;
    std::vector<double> epoch;
    std::array<std::vector<double>, 6> v;
    for (const auto& r : st.history) {
      epoch.push_back(static_cast<double>(r.epoch));
      v[0].push_back(r.train.inf);
      v[1].push_back(r.train.mean);
      v[2].push_back(r.train.stdv);
      v[3].push_back(r.validation.inf);
      v[4].push_back(r.validation.mean);
      v[5].push_back(r.validation.stdv);
    }
    jsonio::write_file(run.plot_dir() / "training_loss.svg",
                       line_chart_svg("training losses", "epoch", "loss",
                                      {{"train inf", "#1f77b4", epoch, v[0]},
                                       {"train mean", "#ff7f0e", epoch, v[1]},
                                       {"train stdv", "#2ca02c", epoch, v[2]},
                                       {"val inf", "#aec7e8", epoch, v[3]},
                                       {"val mean", "#ffbb78", epoch, v[4]},
                                       {"val stdv", "#98df8a", epoch, v[5]}}));
    ++written;
  }
  spdlog::info("plot: {} files in {}", written, run.plot_dir().string());
  return written;
}

}  // namespace fdgnn

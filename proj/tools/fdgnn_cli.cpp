// fdgnn: simulate | build-dataset | train | evaluate | predict | plot

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fdgnn/errors.hpp"
#include "fdgnn/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<int> window;
  std::optional<std::string> tmc;
  std::optional<std::string> output;
  std::optional<std::string> checkpoint;
  std::string scenario;
  bool verbose = false;
};

fdgnn::PipelineConfig resolve(const Flags& f) {
  fdgnn::ConfigOverrides o;
  o.seed = f.seed;
  o.jobs = f.jobs;
  if (f.window) o.window = static_cast<double>(*f.window);
  o.tmc = f.tmc;
  if (f.output) o.output_dir = *f.output;
  std::optional<std::filesystem::path> path;
  if (f.config) path = *f.config;
  return fdgnn::load_pipeline_config(path, o);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("fdgnn"));
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  CLI::App app{"Travel-time distribution estimation on a simulated signalized corridor"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--jobs", f.jobs, "Worker threads for simulate and build-dataset")->check(CLI::PositiveNumber);
  app.add_option("--window", f.window, "Feature window in seconds")->check(CLI::IsMember({300, 900}));
  app.add_option("--tmc", f.tmc, "Turning movement counts")->check(CLI::IsMember({"real", "random", "mixed"}));
  app.add_option("--output", f.output, "Run directory (overrides output_dir)");
  app.add_flag("-v,--verbose", f.verbose, "Debug logging");

  auto* simulate = app.add_subcommand("simulate", "Sample and simulate scenarios");
  auto* build = app.add_subcommand("build-dataset", "Turn simulation logs into graph records");
  auto* train = app.add_subcommand("train", "Train the three networks");
  auto* evaluate = app.add_subcommand("evaluate", "Metric tables on the test split");
  evaluate->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: the run's best checkpoint)");
  auto* predict = app.add_subcommand("predict", "Predicted travel-time PDFs for one record");
  predict->add_option("--checkpoint", f.checkpoint, "Checkpoint")->required();
  predict->add_option("--scenario", f.scenario, "Scenario id, e.g. s00012")->required();
  auto* plot = app.add_subcommand("plot", "SVG charts from evaluation output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  if (f.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    const fdgnn::PipelineConfig config = resolve(f);
    if (simulate->parsed()) {
      fdgnn::cmd_simulate(config);
    } else if (build->parsed()) {
      fdgnn::cmd_build_dataset(config);
    } else if (train->parsed()) {
      fdgnn::cmd_train(config);
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> ck;
      if (f.checkpoint) ck = *f.checkpoint;
      fdgnn::cmd_evaluate(config, ck);
    } else if (predict->parsed()) {
      fdgnn::cmd_predict(config, *f.checkpoint, f.scenario, std::cout);
    } else if (plot->parsed()) {
      fdgnn::cmd_plot(config);
    }
  } catch (const fdgnn::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kConfig;
  } catch (const fdgnn::NumericError& e) {
    spdlog::error("numeric: {}", e.what());
    return kNumeric;
  } catch (const fdgnn::DataError& e) {
    spdlog::error("data: {}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
  return kOk;
}

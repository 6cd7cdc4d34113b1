#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fdgnn/model.hpp"

namespace fdgnn {

enum class Level { kLow, kMedium, kHigh, kTotal };
std::string to_string(Level l);

enum class Covariate { kCycleLength, kTrafficVolume, kMaxGreenPct };
std::string to_string(Covariate c);

// Half-open buckets (-inf, t1), [t1, t2), [t2, inf).
struct BucketSpec {
  Covariate covariate = Covariate::kCycleLength;
  double t1 = 0.0;
  double t2 = 0.0;

  static BucketSpec cycle_length() { return {Covariate::kCycleLength, 160.0, 200.0}; }
  static BucketSpec traffic_volume() { return {Covariate::kTrafficVolume, 700.0, 900.0}; }
  static BucketSpec max_green_pct() { return {Covariate::kMaxGreenPct, 25.0, 50.0}; }
};

Level bucket_level(double value, const BucketSpec& spec);
// cycle; east + west volume; max of the two coordinated green percentages.
double covariate_value(const Covariates& c, Covariate which);
// Level of every record, in order.
std::vector<Level> bucket(std::span<const DatasetRecord* const> records, const BucketSpec& spec);

struct DirectionMetrics {
  double mape = 0.0;
  double std = 0.0;
  double hld = 0.0;
  double nrmse = 0.0;
};

struct RecordMetrics {
  std::string scenario_id;
  DirectionMetrics east;
  DirectionMetrics west;
  // Mean of east and west.
  DirectionMetrics combined;
};

RecordMetrics record_metrics(const DatasetRecord& record, const Prediction& prediction);

struct MetricRow {
  std::string experiment;
  Level level = Level::kTotal;
  std::size_t n = 0;
  DirectionMetrics east;
  DirectionMetrics west;
  DirectionMetrics combined;
};

using Predictor = std::function<std::vector<Prediction>(std::span<const DatasetRecord* const>)>;

Predictor model_predictor(const FdgnnModel& model);
// Predicts the same (mu, sigma) for every record in both directions.
Predictor constant_predictor(double mu, double sigma);
// Train-split mean mu and sigma over both directions.
Predictor mean_baseline(std::span<const DatasetRecord* const> train);
// Returns the targets themselves.
Predictor oracle_predictor();

struct EvaluationResult {
  // "overall" Total row, then Low/Medium/High for each covariate.
  std::vector<MetricRow> table;
  std::vector<RecordMetrics> records;
  std::vector<Prediction> predictions;
};

EvaluationResult evaluate(std::span<const DatasetRecord* const> records, const Predictor& predictor);

// Mean of per-record metrics over `members` (indices into metrics).
MetricRow aggregate(const std::string& experiment, Level level, std::span<const RecordMetrics> metrics,
                    std::span<const std::size_t> members);

// Long format: experiment,level,n,direction,mape,std,hld,nrmse. Empty buckets have blank metrics.
std::string metric_table_csv(const std::vector<MetricRow>& table);

// One JSON line per record with actual/predicted PDFs and imputations.
std::string plot_data_jsonl(std::span<const DatasetRecord* const> records, const std::vector<Prediction>& predictions);

}  // namespace fdgnn

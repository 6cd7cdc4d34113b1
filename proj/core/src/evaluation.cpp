#include "fdgnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fdgnn/metrics.hpp"
#include "json_convert.hpp"

namespace fdgnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double guarded(const char* what, const std::string& id, const std::function<double()>& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    spdlog::warn("{}: {} undefined ({})", id, what, e.what());
    return kNaN;
  }
}

DirectionMetrics direction_metrics(const std::string& id, const std::vector<double>& pdf_true,
                                   const std::vector<double>& pdf_pred, double sigma_true, double sigma_pred) {
  DirectionMetrics m;
  m.mape = guarded("mape", id, [&] { return mape(pdf_true, pdf_pred); });
  m.std = std_error(sigma_true, sigma_pred);
  m.hld = hellinger(pdf_true, pdf_pred);
  m.nrmse = guarded("nrmse", id, [&] { return nrmse(pdf_true, pdf_pred); });
  return m;
}

DirectionMetrics mean_of(const DirectionMetrics& a, const DirectionMetrics& b) {
  return {(a.mape + b.mape) / 2, (a.std + b.std) / 2, (a.hld + b.hld) / 2, (a.nrmse + b.nrmse) / 2};
}

// Mean over the finite values only.
class Mean {
 public:
  void add(double v) {
    if (std::isfinite(v)) {
      sum_ += v;
      ++n_;
    }
  }
  double get() const { return n_ ? sum_ / static_cast<double>(n_) : kNaN; }

 private:
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

DirectionMetrics mean_metrics(std::span<const RecordMetrics> metrics, std::span<const std::size_t> members,
                              DirectionMetrics RecordMetrics::*which) {
  Mean mape_m, std_m, hld_m, nrmse_m;
  for (std::size_t i : members) {
    const DirectionMetrics& d = metrics[i].*which;
    mape_m.add(d.mape);
    std_m.add(d.std);
    hld_m.add(d.hld);
    nrmse_m.add(d.nrmse);
  }
  return {mape_m.get(), std_m.get(), hld_m.get(), nrmse_m.get()};
}

std::string cell(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

Prediction constant_prediction(const DatasetRecord& r, double mu, double sigma) {
  Prediction p;
  p.imputed = Matrix(r.static_graph.x.rows(), kMaskedColumns.size());
  p.mu_east = p.mu_west = mu;
  p.sigma_east = p.sigma_west = sigma;
  p.pdf_east = p.pdf_west = discretize_pdf(mu, sigma);
  return p;
}

}  // namespace

std::string to_string(Level l) {
  switch (l) {
    case Level::kLow: return "Low";
    case Level::kMedium: return "Medium";
    case Level::kHigh: return "High";
    case Level::kTotal: return "Total";
  }
  return "?";
}

std::string to_string(Covariate c) {
  switch (c) {
    case Covariate::kCycleLength: return "cycle_length";
    case Covariate::kTrafficVolume: return "traffic_volume";
    case Covariate::kMaxGreenPct: return "max_green_pct";
  }
  return "?";
}

Level bucket_level(double value, const BucketSpec& spec) {
  if (value < spec.t1) return Level::kLow;
  if (value < spec.t2) return Level::kMedium;
  return Level::kHigh;
}

double covariate_value(const Covariates& c, Covariate which) {
  switch (which) {
    case Covariate::kCycleLength: return c.cycle;
    case Covariate::kTrafficVolume: return c.volume_east + c.volume_west;
    case Covariate::kMaxGreenPct: return std::max(c.green_pct_east, c.green_pct_west);
  }
  return kNaN;
}

std::vector<Level> bucket(std::span<const DatasetRecord* const> records, const BucketSpec& spec) {
  std::vector<Level> out;
  out.reserve(records.size());
  for (const DatasetRecord* r : records) out.push_back(bucket_level(covariate_value(r->covariates, spec.covariate), spec));
  return out;
}

RecordMetrics record_metrics(const DatasetRecord& r, const Prediction& p) {
  RecordMetrics m;
  m.scenario_id = r.scenario_id;
  m.east = direction_metrics(r.scenario_id + " east", r.target.pdf_east, p.pdf_east, r.target.sigma_east, p.sigma_east);
  m.west = direction_metrics(r.scenario_id + " west", r.target.pdf_west, p.pdf_west, r.target.sigma_west, p.sigma_west);
  m.combined = mean_of(m.east, m.west);
  return m;
}

Predictor model_predictor(const FdgnnModel& model) {
  return [&model](std::span<const DatasetRecord* const> records) { return model.predict(records); };
}

Predictor constant_predictor(double mu, double sigma) {
  return [mu, sigma](std::span<const DatasetRecord* const> records) {
    std::vector<Prediction> out;
    for (const DatasetRecord* r : records) out.push_back(constant_prediction(*r, mu, sigma));
    return out;
  };
}

Predictor mean_baseline(std::span<const DatasetRecord* const> train) {
  if (train.empty()) throw DataError("mean baseline needs training records");
  double mu = 0.0, sigma = 0.0;
  for (const DatasetRecord* r : train) {
    mu += r->target.mu_east + r->target.mu_west;
    sigma += r->target.sigma_east + r->target.sigma_west;
  }
  const double n = 2.0 * static_cast<double>(train.size());
  return constant_predictor(mu / n, sigma / n);
}

Predictor oracle_predictor() {
  return [](std::span<const DatasetRecord* const> records) {
    std::vector<Prediction> out;
    for (const DatasetRecord* r : records) {
      Prediction p;
      p.imputed = arterial_columns(r->static_graph.x);
      p.mu_east = r->target.mu_east;
      p.mu_west = r->target.mu_west;
      p.sigma_east = r->target.sigma_east;
      p.sigma_west = r->target.sigma_west;
      p.pdf_east = r->target.pdf_east;
      p.pdf_west = r->target.pdf_west;
      out.push_back(std::move(p));
    }
    return out;
  };
}

MetricRow aggregate(const std::string& experiment, Level level, std::span<const RecordMetrics> metrics,
                    std::span<const std::size_t> members) {
  MetricRow row;
  row.experiment = experiment;
  row.level = level;
  row.n = members.size();
  row.east = mean_metrics(metrics, members, &RecordMetrics::east);
  row.west = mean_metrics(metrics, members, &RecordMetrics::west);
  row.combined = mean_metrics(metrics, members, &RecordMetrics::combined);
  return row;
}

EvaluationResult evaluate(std::span<const DatasetRecord* const> records, const Predictor& predictor) {
  if (records.empty()) throw DataError("evaluate: empty test split");
  EvaluationResult res;
  res.predictions = predictor(records);
  if (res.predictions.size() != records.size()) throw Error("predictor returned the wrong number of predictions");
  for (std::size_t i = 0; i < records.size(); ++i) res.records.push_back(record_metrics(*records[i], res.predictions[i]));

  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  res.table.push_back(aggregate("overall", Level::kTotal, res.records, all));
  for (const BucketSpec& spec : {BucketSpec::cycle_length(), BucketSpec::traffic_volume(), BucketSpec::max_green_pct()}) {
    const auto levels = bucket(records, spec);
    for (Level l : {Level::kLow, Level::kMedium, Level::kHigh}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == l) members.push_back(i);
      res.table.push_back(aggregate(to_string(spec.covariate), l, res.records, members));
    }
  }
  return res;
}

std::string metric_table_csv(const std::vector<MetricRow>& table) {
  std::ostringstream out;
  out << "experiment,level,n,direction,mape,std,hld,nrmse\n";
  for (const auto& row : table) {
    const std::pair<const char*, const DirectionMetrics*> dirs[] = {
        {"east", &row.east}, {"west", &row.west}, {"combined", &row.combined}};
    for (const auto& [name, m] : dirs) {
      out << row.experiment << ',' << to_string(row.level) << ',' << row.n << ',' << name << ',';
      if (row.n == 0) {
        out << ",,,\n";
      } else {
        out << cell(m->mape) << ',' << cell(m->std) << ',' << cell(m->hld) << ',' << cell(m->nrmse) << '\n';
      }
    }
  }
  return out.str();
}

std::string plot_data_jsonl(std::span<const DatasetRecord* const> records, const std::vector<Prediction>& predictions) {
  if (records.size() != predictions.size()) throw DimensionError("plot data: records and predictions differ in count");
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& r = *records[i];
    const Prediction& p = predictions[i];
    nlohmann::ordered_json j;
    j["scenario_id"] = r.scenario_id;
    j["mu_east"] = {r.target.mu_east, p.mu_east};
    j["sigma_east"] = {r.target.sigma_east, p.sigma_east};
    j["mu_west"] = {r.target.mu_west, p.mu_west};
    j["sigma_west"] = {r.target.sigma_west, p.sigma_west};
    j["pdf_east_actual"] = r.target.pdf_east;
    j["pdf_east_predicted"] = p.pdf_east;
    j["pdf_west_actual"] = r.target.pdf_west;
    j["pdf_west_predicted"] = p.pdf_west;
    j["imputed_actual"] = jsonio::matrix_to_json(arterial_columns(r.static_graph.x));
    j["imputed_predicted"] = jsonio::matrix_to_json(p.imputed);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace fdgnn

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fdgnn/errors.hpp"
#include "fdgnn/evaluation.hpp"
#include "fdgnn/metrics.hpp"
#include "fixtures.hpp"

using namespace fdgnn;

namespace {

using V = std::vector<double>;

const Dataset& records() {
  static const Dataset d = fdgnn::testing::simulated_dataset(6, 90);
  return d;
}

std::vector<const DatasetRecord*> pointers(const Dataset& d) {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : d.records) out.push_back(&r);
  return out;
}

}  // namespace

TEST(Mape, Examples) {
  const V y{3, 1, 4};
  EXPECT_EQ(mape(y, y), 0.0);
  EXPECT_DOUBLE_EQ(mape(V{100, 200}, V{110, 180}), 10.0);
  EXPECT_DOUBLE_EQ(mape(V{1, 1}, V{2, 2}), 100.0);
}

TEST(Mape, ZeroBinsExcluded) {
  EXPECT_DOUBLE_EQ(mape(V{0, 100, 0}, V{5, 110, 3}), 10.0);
  EXPECT_THROW(mape(V{0, 0}, V{1, 1}), NumericError);
  EXPECT_THROW(mape(V{1, 2}, V{1}), DimensionError);
}

TEST(StdError, Examples) {
  EXPECT_EQ(std_error(50, 50), 0.0);
  EXPECT_NEAR(std_error(50, 72.21), 22.21, 1e-12);
  EXPECT_EQ(std_error(3, 8), std_error(8, 3));
}

TEST(Hellinger, Examples) {
  EXPECT_EQ(hellinger(V{0.2, 0.8}, V{0.2, 0.8}), 0.0);
  EXPECT_DOUBLE_EQ(hellinger(V{1, 0}, V{0, 1}), 1.0);
  EXPECT_NEAR(hellinger(V{0.25, 0.75}, V{0.75, 0.25}), 0.3660254037844386, 1e-15);
  EXPECT_THROW(hellinger(V{-0.1, 1}, V{0, 1}), NumericError);
}

TEST(Nrmse, Examples) {
  EXPECT_EQ(nrmse(V{0, 10}, V{0, 10}), 0.0);
  EXPECT_DOUBLE_EQ(nrmse(V{0, 10}, V{1, 9}), 0.1);
  EXPECT_DOUBLE_EQ(nrmse(V{0, 70}, V{7, 63}), 0.1);
  EXPECT_THROW(nrmse(V{4, 4}, V{1, 2}), NumericError);
}

TEST(Bucket, Thresholds) {
  const auto cyc = BucketSpec::cycle_length();
  EXPECT_EQ(bucket_level(150, cyc), Level::kLow);
  EXPECT_EQ(bucket_level(160, cyc), Level::kMedium);
  EXPECT_EQ(bucket_level(199.999, cyc), Level::kMedium);
  EXPECT_EQ(bucket_level(200, cyc), Level::kHigh);
  const auto vol = BucketSpec::traffic_volume();
  EXPECT_EQ(bucket_level(699, vol), Level::kLow);
  EXPECT_EQ(bucket_level(700, vol), Level::kMedium);
  EXPECT_EQ(bucket_level(900, vol), Level::kHigh);
  const auto green = BucketSpec::max_green_pct();
  EXPECT_EQ(bucket_level(24.9, green), Level::kLow);
  EXPECT_EQ(bucket_level(25, green), Level::kMedium);
  EXPECT_EQ(bucket_level(50, green), Level::kHigh);
}

TEST(Bucket, Covariates) {
  Covariates c;
  c.cycle = 170;
  c.volume_east = 300;
  c.volume_west = 450;
  c.green_pct_east = 31;
  c.green_pct_west = 52;
  EXPECT_EQ(covariate_value(c, Covariate::kCycleLength), 170);
  EXPECT_EQ(covariate_value(c, Covariate::kTrafficVolume), 750);
  EXPECT_EQ(covariate_value(c, Covariate::kMaxGreenPct), 52);
}

TEST(Evaluate, OracleIsZeroEverywhere) {
  const auto recs = pointers(records());
  const EvaluationResult r = evaluate(recs, oracle_predictor());
  ASSERT_EQ(r.table.size(), 10u);
  EXPECT_EQ(r.table[0].level, Level::kTotal);
  EXPECT_EQ(r.table[0].n, recs.size());
  for (const auto& row : r.table) {
    if (row.n == 0) continue;
    for (const auto* m : {&row.east, &row.west, &row.combined}) {
      EXPECT_EQ(m->mape, 0.0);
      EXPECT_EQ(m->std, 0.0);
      EXPECT_EQ(m->hld, 0.0);
      EXPECT_EQ(m->nrmse, 0.0);
    }
  }
}

TEST(Evaluate, BucketRowsAreMeansOfRecords) {
  const auto recs = pointers(records());
  const EvaluationResult r = evaluate(recs, constant_predictor(700.0, 80.0));
  const BucketSpec specs[] = {BucketSpec::cycle_length(), BucketSpec::traffic_volume(), BucketSpec::max_green_pct()};
  std::size_t row = 1;
  for (const auto& spec : specs) {
    for (Level level : {Level::kLow, Level::kMedium, Level::kHigh}) {
      double hld = 0, std_e = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const double v = covariate_value(recs[i]->covariates, spec.covariate);
        const bool in = level == Level::kLow      ? v < spec.t1
                        : level == Level::kMedium ? (v >= spec.t1 && v < spec.t2)
                                                  : v >= spec.t2;
        if (!in) continue;
        ++n;
        hld += 0.5 * (hellinger(recs[i]->target.pdf_east, discretize_pdf(700, 80)) +
                      hellinger(recs[i]->target.pdf_west, discretize_pdf(700, 80)));
        std_e += std::abs(recs[i]->target.sigma_east - 80.0);
      }
      const MetricRow& m = r.table[row++];
      ASSERT_EQ(m.level, level);
      ASSERT_EQ(m.n, n);
      if (n == 0) continue;
      EXPECT_NEAR(m.combined.hld, hld / n, 1e-12);
      EXPECT_NEAR(m.east.std, std_e / n, 1e-9);
    }
  }
}

TEST(Evaluate, EmptyBucketsHaveBlankMetrics) {
  MetricRow empty;
  empty.experiment = "traffic_volume";
  empty.level = Level::kHigh;
  const std::string csv = metric_table_csv({empty});
  EXPECT_NE(csv.find("traffic_volume,High,0,east,,,,\n"), std::string::npos) << csv;
}

TEST(Evaluate, PlotDataHasOneLinePerRecord) {
  const auto recs = pointers(records());
  const EvaluationResult r = evaluate(recs, oracle_predictor());
  const std::string jsonl = plot_data_jsonl(recs, r.predictions);
  EXPECT_EQ(static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')), recs.size());
  EXPECT_NE(jsonl.find("pdf_east_actual"), std::string::npos);
  EXPECT_NE(jsonl.find("pdf_east_predicted"), std::string::npos);
}

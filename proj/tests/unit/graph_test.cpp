#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/dataset_io.hpp"
#include "fdgnn/errors.hpp"
#include "fdgnn/graph_builder.hpp"
#include "fixtures.hpp"

using namespace fdgnn;
using fdgnn::testing::sampled_scenario;

namespace {

bool is_masked_column(std::size_t c) {
  for (std::size_t m : kMaskedColumns)
    if (m == c) return true;
  return false;
}

}  // namespace

TEST(Mask, ZeroesExactlyTheArterialPhases) {
  const Matrix ones(8, 8, 1.0);
  const Matrix out = apply_mask(ones, phase_mask(8));
  for (std::size_t k = 0; k < 8; ++k)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(out(k, c), is_masked_column(c) ? 0.0 : 1.0);
  EXPECT_EQ(apply_mask(out, phase_mask(8)), out);
  EXPECT_THROW(apply_mask(Matrix(8, 7), phase_mask(8)), DimensionError);
}

TEST(Topology, EdgeOrderAtEightIntersections) {
  const GraphTopology t = corridor_topology(8);
  ASSERT_EQ(t.edges(), 16u);
  EXPECT_EQ(t.src[0], 0u);
  EXPECT_EQ(t.dst[0], 1u);
  EXPECT_TRUE(t.entry[7]);
  EXPECT_EQ(t.src[7], 0u);
  EXPECT_EQ(t.src[8], 1u);
  EXPECT_EQ(t.dst[8], 0u);
  EXPECT_EQ(t.direction[8], Direction::kWest);
  EXPECT_TRUE(t.entry[15]);
  EXPECT_EQ(t.src[15], 7u);
}

TEST(StaticGraph, ZeroDemandGivesZeroCountsAndDensities) {
  Scenario s = sampled_scenario(3);
  s.demand = Demand{0.0, 0.0, std::vector<double>(8, 0.0), std::vector<double>(8, 0.0)};
  const StaticGraph g = build_static_graph(run_scenario(s), s, Window{300, 900});
  for (double v : g.x.data()) EXPECT_EQ(v, 0.0);
  const std::size_t density = g.e.cols() - 1;
  for (std::size_t i = 0; i < g.e.rows(); ++i) EXPECT_EQ(g.e(i, density), 0.0);
}

TEST(StaticGraph, EdgeRowLayout) {
  const Scenario s = sampled_scenario(4);
  const SimulationLog log = run_scenario(s);
  const StaticGraph g = build_static_graph(log, s, Window{300, 900});
  ASSERT_EQ(g.e.cols(), 19u);
  // Segment 2 -> 3 eastbound: distance, downstream tmc, density from phase 2 at node 3.
  EXPECT_EQ(g.e(2, 0), s.corridor.segment_east[2]);
  for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(g.e(2, 1 + j), s.tmc[3][j]);
  EXPECT_EQ(g.e(2, 13), s.behavior.accel);
  EXPECT_DOUBLE_EQ(g.e(2, 18), g.x(3, 1) / s.corridor.segment_east[2]);
  EXPECT_EQ(build_static_graph(log, s, Window{300, 900}, DrvSelection::kFull).e.cols(), 25u);
}

TEST(DynamicGraph, OffsetRatio) {
  SamplingRanges r;
  r.cycle = {200.0, 200.0};
  std::mt19937_64 rng(8);
  Scenario s = sample_scenario(rng, r, CorridorSpec::uniform(8, 600.0), TmcMode::kReal, "o");
  s.plans[0].offset = 50.0;
  const DynamicGraph g = build_dynamic_graph(s, Matrix(8, 8, 3.0));
  EXPECT_EQ(g.x(0, 0), 200.0);
  EXPECT_DOUBLE_EQ(g.x(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(g.x(0, 2), s.plans[0].phase(1).max_green / 200.0);
  EXPECT_EQ(g.x(0, kTimingFeatures + 7), 3.0);
}

TEST(DynamicGraph, MissingImputationsAreListed) {
  Matrix imputed(8, 4, 1.0);
  imputed(2, 1) = std::nan("");
  imputed(5, 3) = std::nan("");
  try {
    merge_imputation(apply_mask(Matrix(8, 8, 2.0), phase_mask(8)), imputed);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("5"), std::string::npos);
  }
  imputed(2, 1) = 7.0;
  imputed(5, 3) = 9.0;
  const Matrix merged = merge_imputation(apply_mask(Matrix(8, 8, 2.0), phase_mask(8)), imputed);
  EXPECT_EQ(merged(2, 1), 7.0);
  EXPECT_EQ(merged(5, 5), 9.0);
  EXPECT_EQ(merged(5, 2), 2.0);
}

TEST(NormalFit, DegenerateSamplesAreFloored) {
  const NormalFit f = fit_normal_pdf({420.0, 420.0, 420.0});
  EXPECT_EQ(f.mu, 420.0);
  EXPECT_EQ(f.sigma, kSigmaFloor);
  EXPECT_THROW(fit_normal_pdf({1.0}), InsufficientDataError);
}

TEST(NormalFit, RecoversMonteCarloParameters) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(500.0, 50.0);
  std::vector<double> x(10000);
  for (auto& v : x) v = n(rng);
  const NormalFit f = fit_normal_pdf(x);
  EXPECT_GE(f.mu, 495.0);
  EXPECT_LE(f.mu, 505.0);
  EXPECT_GE(f.sigma, 45.0);
  EXPECT_LE(f.sigma, 55.0);
  EXPECT_LT(std::abs(f.skewness), 0.1);
}

TEST(Discretize, PeakValueAtBinCenter) {
  const auto pdf = discretize_pdf(505.0, 50.0);
  ASSERT_EQ(pdf.size(), kPdfBins);
  EXPECT_NEAR(pdf[50], 1.0 / (50.0 * std::sqrt(2.0 * M_PI)), 1e-15);
  double mass = 0;
  for (double v : pdf) mass += v * kBinWidth;
  EXPECT_GE(mass, 0.95);
  EXPECT_LE(mass, 1.0 + 1e-12);
}

TEST(Record, ShapesAtEightIntersections) {
  const auto d = fdgnn::testing::simulated_dataset(1, 30);
  ASSERT_EQ(d.records.size(), 1u);
  const auto& r = d.records[0];
  EXPECT_EQ(r.static_graph.x.rows(), 8u);
  EXPECT_EQ(r.static_graph.x.cols(), 8u);
  EXPECT_EQ(r.dynamic_graph.x.rows(), 8u);
  EXPECT_EQ(r.dynamic_graph.x.cols(), 14u);
  EXPECT_EQ(r.dynamic_graph.e.rows(), 16u);
  EXPECT_EQ(r.dynamic_graph.e.cols(), 19u);
  EXPECT_EQ(r.target.pdf_east.size(), 250u);
  EXPECT_EQ(r.target.pdf_west.size(), 250u);
}

TEST(Record, WindowChangesFeaturesButNotTargets) {
  const Scenario s = sampled_scenario(41);
  const SimulationLog log = run_scenario(s);
  const DatasetRecord a = make_record(s, log, Window{300, 900});
  const DatasetRecord b = make_record(s, log, Window{300, 300});
  EXPECT_NE(a.static_graph.x, b.static_graph.x);
  EXPECT_EQ(a.target, b.target);
}

TEST(DatasetIo, RoundTripIsLossless) {
  const Dataset d = fdgnn::testing::simulated_dataset(3, 50);
  std::stringstream io;
  write_dataset(io, d);
  EXPECT_EQ(read_dataset(io), d);
}

TEST(DatasetIo, EmptyDataset) {
  Dataset d;
  std::stringstream io;
  write_dataset(io, d);
  const Dataset back = read_dataset(io);
  EXPECT_TRUE(back.records.empty());
  EXPECT_EQ(back.header, d.header);
}

TEST(DatasetIo, TruncationReportsByteOffset) {
  const Dataset d = fdgnn::testing::simulated_dataset(2, 60);
  std::stringstream io;
  write_dataset(io, d);
  const std::string text = io.str();
  const std::size_t cut = text.size() - 200;
  std::stringstream broken(text.substr(0, cut));
  try {
    read_dataset(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record_index(), 1);
    EXPECT_GT(e.byte_offset(), text.find('\n'));
    EXPECT_LE(e.byte_offset(), cut);
  }
}

TEST(DatasetIo, VersionMismatch) {
  Dataset d;
  std::stringstream io;
  write_dataset(io, d);
  std::string text = io.str();
  const auto at = text.find("\"schema_version\":1");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 18, "\"schema_version\":9");
  std::stringstream in(text);
  EXPECT_THROW(read_dataset(in), ParseError);
}

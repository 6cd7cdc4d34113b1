#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fdgnn/gat.hpp"
#include "fdgnn/model.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace fdgnn;

namespace {

const Dataset& small_dataset() {
  static const Dataset d = fdgnn::testing::simulated_dataset(4, 70);
  return d;
}

std::vector<const DatasetRecord*> pointers(const Dataset& d) {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : d.records) out.push_back(&r);
  return out;
}

Tensor random_tensor(std::mt19937_64& rng, Shape s) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(shape_numel(s));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(s), std::move(v));
}

void fill(Tensor& t, double v) {
  for (double& x : t.mutable_values()) x = v;
}

}  // namespace

TEST(Gat, SingleNodeIsReluOfProjection) {
  std::mt19937_64 rng(1);
  GatLayer layer("g", 3, 4, 1, 0, rng);
  for (double& b : layer.bias.mutable_values()) b = 0.1;
  const Tensor x = Tensor::from({1, 3}, {0.5, -1.0, 2.0});
  const EdgeIndex g{1, {}, {}};
  const Tensor out = layer.forward(x, g, Tensor());
  const auto att = layer.attention(x, g, Tensor());
  ASSERT_EQ(att[0].size(), 1u);
  EXPECT_DOUBLE_EQ(att[0][0], 1.0);
  for (std::size_t j = 0; j < 4; ++j) {
    double h = 0.1;
    for (std::size_t i = 0; i < 3; ++i) h += x.at(0, i) * layer.weight[0].at(i, j);
    EXPECT_NEAR(out.at(0, j), std::max(h, 0.0), 1e-14);
  }
}

TEST(Gat, IdenticalNeighborsGetUniformAttention) {
  std::mt19937_64 rng(2);
  GatLayer layer("g", 2, 8, 4, 0, rng);
  const Tensor x = Tensor::from({4, 2}, {0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.7});
  const EdgeIndex g{4, {1, 2, 3}, {0, 0, 0}};
  for (const auto& head : layer.attention(x, g, Tensor())) {
    for (std::size_t e = 0; e < 3; ++e) EXPECT_NEAR(head[e], 0.25, 1e-12);
    EXPECT_NEAR(head[3], 0.25, 1e-12);
  }
}

TEST(Gat, PermutationEquivariant) {
  std::mt19937_64 rng(3);
  GatLayer layer("g", 3, 8, 4, 5, rng);
  const Tensor x = random_tensor(rng, {5, 3});
  const Tensor e = random_tensor(rng, {6, 5});
  const EdgeIndex g{5, {0, 1, 2, 3, 4, 4}, {1, 2, 3, 4, 0, 2}};
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};  // new node i is old perm[i]
  std::vector<std::size_t> inv(5);
  for (std::size_t i = 0; i < 5; ++i) inv[perm[i]] = i;
  EdgeIndex pg{5, {}, {}};
  for (std::size_t k = 0; k < g.edges(); ++k) {
    pg.src.push_back(inv[g.src[k]]);
    pg.dst.push_back(inv[g.dst[k]]);
  }
  const Tensor out = layer.forward(x, g, e);
  const Tensor pout = layer.forward(gather_rows(x, perm), pg, e);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(pout.at(i, j), out.at(perm[i], j), 1e-12);
}

TEST(Gat, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  GatLayer layer("g", 3, 4, 2, 2, rng);
  const EdgeIndex g{3, {0, 1, 2}, {1, 2, 0}};
  auto x = Tensor::parameter({3, 3}, {0.1, -0.4, 0.9, 0.3, 0.2, -0.5, 0.6, -0.8, 0.25}, "x");
  auto e = Tensor::parameter({3, 2}, {0.5, -0.3, 0.2, 0.7, -0.6, 0.1}, "e");
  auto f = [&](const std::vector<Tensor>& in) { return sum(softplus(layer.forward(in[0], g, in[1]))); };
  std::vector<Tensor> inputs{x, e};
  for (const auto& p : layer.parameters()) inputs.push_back(p);
  EXPECT_LT(fdgnn::testing::max_grad_error(f, inputs), 1e-4);
}

TEST(EdgeMlp, ZeroWeightsGiveZeroAndShapeIsKept) {
  std::mt19937_64 rng(5);
  EdgeMlp mlp("m", 19, 64, rng);
  const Tensor e = random_tensor(rng, {16, 19});
  EXPECT_EQ(mlp.forward(e).shape(), (Shape{16, 19}));
  for (auto p : mlp.parameters()) fill(p, 0.0);
  const Tensor out = mlp.forward(e);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(EdgeMlp, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  EdgeMlp mlp("m", 19, 16, rng);
  const Tensor init = random_tensor(rng, {16, 19});
  auto e = Tensor::parameter({16, 19}, {init.values().begin(), init.values().end()}, "e");
  const Tensor w = random_tensor(rng, {16, 19});
  auto f = [&](const std::vector<Tensor>& in) { return sum(mul(mlp.forward(in[0]), w)); };
  EXPECT_LT(fdgnn::testing::max_grad_error(f, {e}), 1e-4);
}

TEST(Fuse, ConstantEmbeddingsAndWidth) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 1);
  const GraphBatch b = model.static_batch(recs);
  const std::size_t E = b.index.edges(), N = b.graphs * b.nodes_per_graph;
  const Tensor fused = fuse(Tensor::full({E, 64}, 1.5), Tensor::full({N, 64}, 1.5), b);
  EXPECT_EQ(fused.shape(), (Shape{b.graphs, 192}));
  for (double v : fused.values()) EXPECT_DOUBLE_EQ(v, 1.5);
}

TEST(Fuse, InvariantToSwappingSameDirectionEdges) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 1);
  const GraphBatch b = model.static_batch(recs);
  std::mt19937_64 rng(7);
  const Tensor edges = random_tensor(rng, {b.index.edges(), 3});
  const Tensor nodes = random_tensor(rng, {b.graphs * b.nodes_per_graph, 3});
  std::vector<std::size_t> order(b.index.edges());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::swap(order[1], order[4]);  // both eastbound segments of graph 0
  ASSERT_EQ(b.edge_group[1], b.edge_group[4]);
  const Tensor a = fuse(edges, nodes, b);
  const Tensor c = fuse(gather_rows(edges, order), nodes, b);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.values()[i], c.values()[i], 1e-14);
}

TEST(ImputationNet, ZeroHeadGivesZeroImputations) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 2);
  model.normalization = fit_normalization(recs);
  for (auto p : model.m_x.head.parameters()) fill(p, 0.0);
  const Tensor out = model.impute(model.static_batch(recs));
  EXPECT_EQ(out.shape(), (Shape{recs.size() * 8, 4}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(ImputationNet, OutputsAreNonnegative) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 3);
  model.normalization = fit_normalization(recs);
  const Tensor out = model.impute(model.static_batch(recs));
  for (double v : out.values()) EXPECT_GE(v, 0.0);
}

TEST(RegressionNet, SigmaFloorAndDeterminism) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 4);
  model.normalization = fit_normalization(recs);
  // Push the head far negative so softplus underflows toward the floor.
  for (double& v : model.m_sigma.fc2.bias.mutable_values()) v = -1e3;
  const auto p1 = model.predict(recs);
  const auto p2 = model.predict(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_GE(p1[i].sigma_east, kSigmaFloor);
    EXPECT_GE(p1[i].sigma_west, kSigmaFloor);
    EXPECT_GE(p1[i].mu_east, 0.0);
    EXPECT_EQ(p1[i].mu_east, p2[i].mu_east);
    EXPECT_EQ(p1[i].pdf_west, p2[i].pdf_west);
  }
}

TEST(Forward, PdfIsDiscretizedPrediction) {
  const auto recs = pointers(small_dataset());
  FdgnnModel model(ModelConfig{}, 5);
  model.normalization = fit_normalization(recs);
  for (const auto* r : recs) {
    const Prediction p = model.predict(*r);
    ASSERT_EQ(p.pdf_east.size(), kPdfBins);
    EXPECT_EQ(p.pdf_east, discretize_pdf(p.mu_east, p.sigma_east));
    EXPECT_EQ(p.pdf_west, discretize_pdf(p.mu_west, p.sigma_west));
    for (double v : p.pdf_east) EXPECT_GE(v, 0.0);
    const auto peak = static_cast<std::size_t>(std::max_element(p.pdf_east.begin(), p.pdf_east.end()) -
                                               p.pdf_east.begin());
    EXPECT_EQ(peak, static_cast<std::size_t>(p.mu_east / kBinWidth));
    double mass = 0;
    for (double v : p.pdf_west) mass += v * kBinWidth;
    EXPECT_GT(mass, 0.9);
    EXPECT_LE(mass, 1.0 + 1e-12);
  }
}

TEST(Model, ParameterCountInRange) {
  FdgnnModel model(ModelConfig{}, 0);
  EXPECT_GE(model.parameter_count(), 10000u);
  EXPECT_LE(model.parameter_count(), 200000u);
  std::size_t n = 0;
  for (const auto& p : model.parameters()) n += p.numel();
  EXPECT_EQ(n, model.parameter_count());
  EXPECT_EQ(model.m_x_parameters().size() + model.m_mu_parameters().size() + model.m_sigma_parameters().size(),
            model.parameters().size());
}

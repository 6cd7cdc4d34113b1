#pragma once

// The three networks:
//   M_x      imputes the hidden arterial-phase counts from the masked static graph;
//   M_mu     regresses eastbound/westbound mean travel time on the dynamic graph;
//   M_sigma  same architecture, regresses the standard deviation.
//
// All inputs are standardized with statistics fitted on the training split
// and stored alongside the weights.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdgnn/gat.hpp"
#include "fdgnn/graph_builder.hpp"

namespace fdgnn {

struct ModelConfig {
  std::size_t edge_dim = 19;
  std::size_t mx_hidden = 32;
  std::size_t mx_heads = 4;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t edge_hidden = 64;
  std::size_t fc_hidden = 64;

  bool operator==(const ModelConfig&) const = default;
};

// Per-column affine standardization (x - mean) / scale.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> scale;

  static ColumnStats identity(std::size_t cols);
  // Zero-variance columns get scale 1.
  static ColumnStats fit(std::span<const Matrix* const> rows);
  Matrix apply(const Matrix& m) const;

  bool operator==(const ColumnStats&) const = default;
};

struct Normalization {
  ColumnStats static_node = ColumnStats::identity(kNodeFeatures);
  ColumnStats static_edge;
  ColumnStats dynamic_node = ColumnStats::identity(kDynamicNodeFeatures);
  ColumnStats dynamic_edge;
  // Output scale of each imputed phase column (1, 2, 5, 6).
  std::array<double, 4> count_scale{1.0, 1.0, 1.0, 1.0};
  double mu_mean = 0.0;
  double mu_scale = 1.0;
  double sigma_mean = kSigmaFloor;
  double sigma_scale = 1.0;

  static Normalization identity(std::size_t edge_dim);
  bool operator==(const Normalization&) const = default;
};

Normalization fit_normalization(std::span<const DatasetRecord* const> train);

// Disjoint union of equally shaped graphs.
struct GraphBatch {
  std::size_t graphs = 0;
  std::size_t nodes_per_graph = 0;
  EdgeIndex index;
  // graph * 2 + direction for every edge.
  std::vector<std::size_t> edge_group;
  // Graph of every node.
  std::vector<std::size_t> node_graph;
  Tensor x;
  Tensor e;
};

GraphBatch make_batch(const GraphTopology& topology, std::span<const Matrix* const> node_features,
                      std::span<const Matrix* const> edge_features, const ColumnStats& node_stats,
                      const ColumnStats& edge_stats);

// Mean east edge embedding ⊕ mean west edge embedding ⊕ mean node embedding, per graph.
Tensor fuse(const Tensor& edge_embeddings, const Tensor& node_embeddings, const GraphBatch& batch);

struct ImputationNet {
  GatLayer gat1;
  GatLayer gat2;
  Linear head;

  std::vector<Tensor> parameters() const;
};

struct RegressionNet {
  GatLayer gat1;
  EdgeMlp edge_mlp;
  GatLayer gat2;
  Linear fc1;
  Linear fc2;

  std::vector<Tensor> parameters() const;
};

struct Prediction {
  // K×4 imputed counts for phases 1, 2, 5, 6.
  Matrix imputed;
  double mu_east = 0.0;
  double sigma_east = kSigmaFloor;
  double mu_west = 0.0;
  double sigma_west = kSigmaFloor;
  std::vector<double> pdf_east;
  std::vector<double> pdf_west;
};

class FdgnnModel {
 public:
  FdgnnModel(const ModelConfig& config, std::uint64_t seed);

  // (graphs·K)×4 nonnegative counts.
  Tensor impute(const GraphBatch& masked_static) const;
  // graphs×2 (east, west) in seconds; mu >= 0 and sigma >= the floor.
  Tensor regress_mu(const GraphBatch& dynamic) const;
  Tensor regress_sigma(const GraphBatch& dynamic) const;

  // Building blocks exposed for tests.
  Tensor regression_head(const RegressionNet& net, const GraphBatch& dynamic) const;

  GraphBatch static_batch(std::span<const DatasetRecord* const> records) const;
  // Dynamic graphs whose counts come from `inflow` (one K×8 matrix per record).
  GraphBatch dynamic_batch(std::span<const DatasetRecord* const> records, std::span<const Matrix> inflow) const;

  // Full inference: impute, rebuild the dynamic graph, regress, discretize.
  std::vector<Prediction> predict(std::span<const DatasetRecord* const> records) const;
  Prediction predict(const DatasetRecord& record) const;

  std::vector<Tensor> m_x_parameters() const { return m_x.parameters(); }
  std::vector<Tensor> m_mu_parameters() const { return m_mu.parameters(); }
  std::vector<Tensor> m_sigma_parameters() const { return m_sigma.parameters(); }
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

  const ModelConfig& config() const { return config_; }

  Normalization normalization;
  ImputationNet m_x;
  RegressionNet m_mu;
  RegressionNet m_sigma;

 private:
  ModelConfig config_;
};

// x with column j multiplied by factors[j].
Tensor scale_columns(const Tensor& x, std::span<const double> factors);

// Splits (graphs·K)×4 imputations into one K×4 matrix per graph.
std::vector<Matrix> split_imputations(const Tensor& imputed, std::size_t graphs);

}  // namespace fdgnn

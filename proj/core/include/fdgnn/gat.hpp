#pragma once

// Graph attention building blocks.
//
// For each head h a layer computes H = X W_h and, for every edge j -> i
// (plus one self-loop per node with zero edge features),
//
//   logit_ij = leaky_relu(a_src . H_j + a_dst . H_i + a_edge . (e_ij W_e,h), 0.2)
//   alpha_ij = softmax of logit over the in-edges of i
//   out_i    = relu(sum_j alpha_ij (H_j + e_ij W_e,h) + b)
//
// Heads are concatenated. Without edge features the e terms vanish.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "fdgnn/matrix.hpp"
#include "fdgnn/tensor.hpp"

namespace fdgnn {

inline constexpr double kAttentionSlope = 0.2;

struct EdgeIndex {
  std::size_t nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;

  std::size_t edges() const { return src.size(); }
};

// Glorot-uniform initialized parameter of shape rows×cols.
Tensor glorot(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::string name);

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng);

  Tensor forward(const Tensor& x) const;
  std::vector<Tensor> parameters() const { return {weight, bias}; }

  Tensor weight;
  Tensor bias;
};

class EdgeMlp {
 public:
  EdgeMlp() = default;
  EdgeMlp(std::string name, std::size_t edge_dim, std::size_t hidden, std::mt19937_64& rng);

  // decoder(relu(encoder(e))), row-wise.
  Tensor forward(const Tensor& e) const;
  std::vector<Tensor> parameters() const;

  Linear encoder;
  Linear decoder;
};

class GatLayer {
 public:
  GatLayer() = default;
  // out_dim must be divisible by heads; edge_dim 0 disables edge features.
  GatLayer(std::string name, std::size_t in_dim, std::size_t out_dim, std::size_t heads, std::size_t edge_dim,
           std::mt19937_64& rng);

  // x: nodes×in_dim. edge_features: edges×edge_dim, or an undefined Tensor
  // when the layer has no edge features.
  Tensor forward(const Tensor& x, const EdgeIndex& graph, const Tensor& edge_features) const;

  // Attention weights per head, one entry per edge followed by one per
  // self-loop (node order). Values only.
  std::vector<std::vector<double>> attention(const Tensor& x, const EdgeIndex& graph,
                                             const Tensor& edge_features) const;

  // relu(e W_e) concatenated over heads: the layer's view of each edge.
  Tensor edge_embedding(const Tensor& edge_features) const;

  std::vector<Tensor> parameters() const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return head_dim_ * heads_; }
  std::size_t heads() const { return heads_; }
  std::size_t edge_dim() const { return edge_dim_; }

  std::vector<Tensor> weight;
  std::vector<Tensor> att_src;
  std::vector<Tensor> att_dst;
  std::vector<Tensor> edge_weight;
  std::vector<Tensor> att_edge;
  Tensor bias;

 private:
  struct HeadOutput {
    Tensor message_sum;
    Tensor alpha;
  };
  HeadOutput head_forward(std::size_t h, const Tensor& x, const EdgeIndex& graph, const Tensor& edge_features) const;

  std::size_t in_dim_ = 0;
  std::size_t head_dim_ = 0;
  std::size_t heads_ = 0;
  std::size_t edge_dim_ = 0;
};

}  // namespace fdgnn

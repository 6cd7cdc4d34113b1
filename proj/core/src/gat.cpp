#include "fdgnn/gat.hpp"

#include <cmath>

#include "fdgnn/errors.hpp"

namespace fdgnn {

Tensor glorot(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::string name) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  return Tensor::parameter({rows, cols}, std::move(v), std::move(name));
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight(glorot(rng, in, out, name + ".weight")),
      bias(Tensor::parameter({1, out}, std::vector<double>(out, 0.0), name + ".bias")) {}

Tensor Linear::forward(const Tensor& x) const { return add_row(matmul(x, weight), bias); }

EdgeMlp::EdgeMlp(std::string name, std::size_t edge_dim, std::size_t hidden, std::mt19937_64& rng)
    : encoder(name + ".encoder", edge_dim, hidden, rng), decoder(name + ".decoder", hidden, edge_dim, rng) {}

Tensor EdgeMlp::forward(const Tensor& e) const { return decoder.forward(relu(encoder.forward(e))); }

std::vector<Tensor> EdgeMlp::parameters() const {
  auto p = encoder.parameters();
  for (auto& t : decoder.parameters()) p.push_back(t);
  return p;
}

GatLayer::GatLayer(std::string name, std::size_t in_dim, std::size_t out_dim, std::size_t heads,
                   std::size_t edge_dim, std::mt19937_64& rng)
    : in_dim_(in_dim), heads_(heads), edge_dim_(edge_dim) {
  if (heads == 0 || out_dim % heads != 0) {
    throw ConfigError(name + ": output width " + std::to_string(out_dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  head_dim_ = out_dim / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string p = name + ".head" + std::to_string(h);
    weight.push_back(glorot(rng, in_dim, head_dim_, p + ".weight"));
    att_src.push_back(glorot(rng, head_dim_, 1, p + ".att_src"));
    att_dst.push_back(glorot(rng, head_dim_, 1, p + ".att_dst"));
    if (edge_dim > 0) {
      edge_weight.push_back(glorot(rng, edge_dim, head_dim_, p + ".edge_weight"));
      att_edge.push_back(glorot(rng, head_dim_, 1, p + ".att_edge"));
    }
  }
  bias = Tensor::parameter({1, out_dim}, std::vector<double>(out_dim, 0.0), name + ".bias");
}

GatLayer::HeadOutput GatLayer::head_forward(std::size_t h, const Tensor& x, const EdgeIndex& graph,
                                            const Tensor& edge_features) const {
  const std::size_t N = graph.nodes;
  std::vector<std::size_t> src = graph.src, dst = graph.dst;
  for (std::size_t i = 0; i < N; ++i) {
    src.push_back(i);
    dst.push_back(i);
  }
  const Tensor H = matmul(x, weight[h]);
  const Tensor hs = gather_rows(H, src);
  const Tensor hd = gather_rows(H, dst);
  Tensor logit = add(matmul(hs, att_src[h]), matmul(hd, att_dst[h]));
  Tensor message = hs;
  if (edge_dim_ > 0) {
    const Tensor parts[] = {matmul(edge_features, edge_weight[h]), Tensor::zeros({N, head_dim_})};
    const Tensor ee = concat_rows(parts);
    logit = add(logit, matmul(ee, att_edge[h]));
    message = add(message, ee);
  }
  const Tensor alpha = segment_softmax(leaky_relu(logit, kAttentionSlope), dst, N);
  return {scatter_add_rows(scale_rows(message, alpha), dst, N), alpha};
}

Tensor GatLayer::forward(const Tensor& x, const EdgeIndex& graph, const Tensor& edge_features) const {
  if (x.dim() != 2 || x.cols() != in_dim_ || x.rows() != graph.nodes) {
    throw DimensionError("gat layer: expected node features " + std::to_string(graph.nodes) + "x" +
                         std::to_string(in_dim_) + ", got " + shape_to_string(x.shape()));
  }
  for (std::size_t i = 0; i < graph.edges(); ++i) {
    if (graph.src[i] >= graph.nodes || graph.dst[i] >= graph.nodes) {
      throw DimensionError("gat layer: edge " + std::to_string(i) + " references a node out of range");
    }
  }
  if (edge_dim_ > 0) {
    if (!edge_features.defined() || edge_features.dim() != 2 || edge_features.rows() != graph.edges() ||
        edge_features.cols() != edge_dim_) {
      throw DimensionError("gat layer: expected edge features " + std::to_string(graph.edges()) + "x" +
                           std::to_string(edge_dim_));
    }
  }
  std::vector<Tensor> heads;
  heads.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) heads.push_back(head_forward(h, x, graph, edge_features).message_sum);
  const Tensor joined = heads_ == 1 ? heads.front() : concat_cols(heads);
  return relu(add_row(joined, bias));
}

std::vector<std::vector<double>> GatLayer::attention(const Tensor& x, const EdgeIndex& graph,
                                                     const Tensor& edge_features) const {
  NoGradGuard guard;
  std::vector<std::vector<double>> out;
  for (std::size_t h = 0; h < heads_; ++h) {
    const Tensor alpha = head_forward(h, x, graph, edge_features).alpha;
    out.emplace_back(alpha.values().begin(), alpha.values().end());
  }
  return out;
}

Tensor GatLayer::edge_embedding(const Tensor& edge_features) const {
  if (edge_dim_ == 0) throw ConfigError("gat layer has no edge features");
  std::vector<Tensor> parts;
  for (std::size_t h = 0; h < heads_; ++h) parts.push_back(matmul(edge_features, edge_weight[h]));
  return relu(heads_ == 1 ? parts.front() : concat_cols(parts));
}

std::vector<Tensor> GatLayer::parameters() const {
  std::vector<Tensor> p;
  for (std::size_t h = 0; h < heads_; ++h) {
    p.push_back(weight[h]);
    p.push_back(att_src[h]);
    p.push_back(att_dst[h]);
    if (edge_dim_ > 0) {
      p.push_back(edge_weight[h]);
      p.push_back(att_edge[h]);
    }
  }
  p.push_back(bias);
  return p;
}

}  // namespace fdgnn

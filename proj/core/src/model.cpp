#include "fdgnn/model.hpp"

#include <cmath>
#include <numeric>

#include "fdgnn/errors.hpp"

namespace fdgnn {

namespace {

std::vector<Tensor> concat(std::initializer_list<std::vector<Tensor>> groups) {
  std::vector<Tensor> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

RegressionNet make_regression_net(const std::string& name, const ModelConfig& c, std::mt19937_64& rng) {
  RegressionNet n;
  n.gat1 = GatLayer(name + ".gat1", kDynamicNodeFeatures, c.hidden, c.heads, c.edge_dim, rng);
  n.edge_mlp = EdgeMlp(name + ".edge_mlp", c.edge_dim, c.edge_hidden, rng);
  n.gat2 = GatLayer(name + ".gat2", c.hidden, c.hidden, 1, c.edge_dim, rng);
  n.fc1 = Linear(name + ".fc1", 3 * c.hidden, c.fc_hidden, rng);
  n.fc2 = Linear(name + ".fc2", c.fc_hidden, 2, rng);
  return n;
}

double column_std(const std::vector<double>& v) {
  if (v.size() < 2) return 1.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s = std::sqrt(s / static_cast<double>(v.size()));
  return s > 1e-12 ? s : 1.0;
}

double column_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ColumnStats ColumnStats::identity(std::size_t cols) {
  return {std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0)};
}

ColumnStats ColumnStats::fit(std::span<const Matrix* const> rows) {
  if (rows.empty()) throw DataError("cannot fit feature statistics on no data");
  const std::size_t cols = rows.front()->cols();
  ColumnStats s = identity(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> v;
    for (const Matrix* m : rows) {
      if (m->cols() != cols) throw DimensionError("feature statistics: inconsistent column counts");
      for (std::size_t r = 0; r < m->rows(); ++r) v.push_back((*m)(r, c));
    }
    s.mean[c] = column_mean(v);
    s.scale[c] = column_std(v);
  }
  return s;
}

Matrix ColumnStats::apply(const Matrix& m) const {
  if (m.cols() != mean.size()) {
    throw DimensionError("feature standardization: expected " + std::to_string(mean.size()) + " columns, got " +
                         std::to_string(m.cols()));
  }
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - mean[c]) / scale[c];
  return out;
}

Normalization Normalization::identity(std::size_t edge_dim) {
  Normalization n;
  n.static_edge = ColumnStats::identity(edge_dim);
  n.dynamic_edge = ColumnStats::identity(edge_dim);
  return n;
}

Normalization fit_normalization(std::span<const DatasetRecord* const> train) {
  if (train.empty()) throw DataError("cannot fit normalization on an empty training split");
  Normalization n;
  std::vector<Matrix> xm, em;
  std::vector<const Matrix*> xs, es, xd, ed;
  xm.reserve(train.size());
  em.reserve(train.size());
  for (const DatasetRecord* r : train) {
    xm.push_back(masked_node_features(r->static_graph));
    em.push_back(masked_edge_features(r->static_graph));
    xd.push_back(&r->dynamic_graph.x);
    ed.push_back(&r->dynamic_graph.e);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    xs.push_back(&xm[i]);
    es.push_back(&em[i]);
  }
  n.static_node = ColumnStats::fit(xs);
  n.static_edge = ColumnStats::fit(es);
  n.dynamic_node = ColumnStats::fit(xd);
  n.dynamic_edge = ColumnStats::fit(ed);
  for (std::size_t j = 0; j < kMaskedColumns.size(); ++j) {
    std::vector<double> v;
    for (const DatasetRecord* r : train)
      for (std::size_t k = 0; k < r->static_graph.x.rows(); ++k) v.push_back(r->static_graph.x(k, kMaskedColumns[j]));
    n.count_scale[j] = column_std(v);
  }
  std::vector<double> mu, sigma;
  for (const DatasetRecord* r : train) {
    mu.push_back(r->target.mu_east);
    mu.push_back(r->target.mu_west);
    sigma.push_back(r->target.sigma_east);
    sigma.push_back(r->target.sigma_west);
  }
  n.mu_mean = column_mean(mu);
  n.mu_scale = column_std(mu);
  n.sigma_mean = column_mean(sigma);
  n.sigma_scale = column_std(sigma);
  return n;
}

GraphBatch make_batch(const GraphTopology& topo, std::span<const Matrix* const> node_features,
                      std::span<const Matrix* const> edge_features, const ColumnStats& node_stats,
                      const ColumnStats& edge_stats) {
  if (node_features.empty() || node_features.size() != edge_features.size()) {
    throw DimensionError("make_batch: need one node and one edge matrix per graph");
  }
  GraphBatch b;
  b.graphs = node_features.size();
  b.nodes_per_graph = topo.nodes;
  b.index.nodes = b.graphs * topo.nodes;
  const std::size_t nf = node_features.front()->cols(), ef = edge_features.front()->cols();
  std::vector<double> xv, ev;
  xv.reserve(b.index.nodes * nf);
  ev.reserve(b.graphs * topo.edges() * ef);
  for (std::size_t g = 0; g < b.graphs; ++g) {
    const Matrix& x = *node_features[g];
    const Matrix& e = *edge_features[g];
    if (x.rows() != topo.nodes || x.cols() != nf || e.rows() != topo.edges() || e.cols() != ef) {
      throw DimensionError("make_batch: graph " + std::to_string(g) + " does not match the batch shape");
    }
    const Matrix xn = node_stats.apply(x), en = edge_stats.apply(e);
    xv.insert(xv.end(), xn.data().begin(), xn.data().end());
    ev.insert(ev.end(), en.data().begin(), en.data().end());
    const std::size_t off = g * topo.nodes;
    for (std::size_t i = 0; i < topo.edges(); ++i) {
      b.index.src.push_back(off + topo.src[i]);
      b.index.dst.push_back(off + topo.dst[i]);
      b.edge_group.push_back(2 * g + static_cast<std::size_t>(topo.direction[i]));
    }
    for (std::size_t k = 0; k < topo.nodes; ++k) b.node_graph.push_back(g);
  }
  b.x = Tensor::from({b.index.nodes, nf}, std::move(xv));
  b.e = Tensor::from({b.index.edges(), ef}, std::move(ev));
  return b;
}

Tensor fuse(const Tensor& edge_embeddings, const Tensor& node_embeddings, const GraphBatch& batch) {
  const Tensor by_direction = segment_mean(edge_embeddings, batch.edge_group, 2 * batch.graphs);
  std::vector<std::size_t> east, west;
  for (std::size_t g = 0; g < batch.graphs; ++g) {
    east.push_back(2 * g);
    west.push_back(2 * g + 1);
  }
  const Tensor parts[] = {gather_rows(by_direction, east), gather_rows(by_direction, west),
                          segment_mean(node_embeddings, batch.node_graph, batch.graphs)};
  return concat_cols(parts);
}

std::vector<Tensor> ImputationNet::parameters() const {
  return concat({gat1.parameters(), gat2.parameters(), head.parameters()});
}

std::vector<Tensor> RegressionNet::parameters() const {
  return concat({gat1.parameters(), edge_mlp.parameters(), gat2.parameters(), fc1.parameters(), fc2.parameters()});
}

FdgnnModel::FdgnnModel(const ModelConfig& c, std::uint64_t seed) : config_(c) {
  if (c.edge_dim != edge_feature_dim(DrvSelection::kLongitudinal) && c.edge_dim != edge_feature_dim(DrvSelection::kFull)) {
    throw ConfigError("model: unsupported edge feature width " + std::to_string(c.edge_dim));
  }
  std::mt19937_64 rng(seed);
  normalization = Normalization::identity(c.edge_dim);
  m_x.gat1 = GatLayer("m_x.gat1", kNodeFeatures, c.mx_hidden, c.mx_heads, c.edge_dim, rng);
  m_x.gat2 = GatLayer("m_x.gat2", c.mx_hidden, c.mx_hidden, 1, c.edge_dim, rng);
  m_x.head = Linear("m_x.head", c.mx_hidden, kMaskedColumns.size(), rng);
  m_mu = make_regression_net("m_mu", c, rng);
  m_sigma = make_regression_net("m_sigma", c, rng);
}

Tensor FdgnnModel::impute(const GraphBatch& b) const {
  const Tensor h1 = m_x.gat1.forward(b.x, b.index, b.e);
  const Tensor h2 = m_x.gat2.forward(h1, b.index, b.e);
  return scale_columns(relu(m_x.head.forward(h2)), normalization.count_scale);
}

Tensor FdgnnModel::regression_head(const RegressionNet& net, const GraphBatch& b) const {
  const Tensor h1 = net.gat1.forward(b.x, b.index, b.e);
  const Tensor e2 = net.edge_mlp.forward(b.e);
  const Tensor h2 = net.gat2.forward(h1, b.index, e2);
  const Tensor fused = fuse(net.gat2.edge_embedding(e2), h2, b);
  return net.fc2.forward(relu(net.fc1.forward(fused)));
}

Tensor FdgnnModel::regress_mu(const GraphBatch& b) const {
  const Tensor h = regression_head(m_mu, b);
  return relu(add_scalar(mul_scalar(h, normalization.mu_scale), normalization.mu_mean));
}

Tensor FdgnnModel::regress_sigma(const GraphBatch& b) const {
  const Tensor h = regression_head(m_sigma, b);
  const double shift = normalization.sigma_mean - kSigmaFloor;
  return add_scalar(softplus(add_scalar(mul_scalar(h, normalization.sigma_scale), shift)), kSigmaFloor);
}

GraphBatch FdgnnModel::static_batch(std::span<const DatasetRecord* const> records) const {
  if (records.empty()) throw DataError("empty batch");
  std::vector<Matrix> xm, em;
  xm.reserve(records.size());
  em.reserve(records.size());
  for (const DatasetRecord* r : records) {
    xm.push_back(masked_node_features(r->static_graph));
    em.push_back(masked_edge_features(r->static_graph));
  }
  std::vector<const Matrix*> xs, es;
  for (std::size_t i = 0; i < records.size(); ++i) {
    xs.push_back(&xm[i]);
    es.push_back(&em[i]);
  }
  return make_batch(records.front()->static_graph.topology, xs, es, normalization.static_node,
                    normalization.static_edge);
}

GraphBatch FdgnnModel::dynamic_batch(std::span<const DatasetRecord* const> records,
                                     std::span<const Matrix> inflow) const {
  if (records.empty()) throw DataError("empty batch");
  if (inflow.size() != records.size()) throw DimensionError("dynamic_batch: one inflow matrix per record required");
  std::vector<DynamicGraph> graphs;
  graphs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) graphs.push_back(replace_inflow(records[i]->dynamic_graph, inflow[i]));
  std::vector<const Matrix*> xs, es;
  for (const auto& g : graphs) {
    xs.push_back(&g.x);
    es.push_back(&g.e);
  }
  return make_batch(graphs.front().topology, xs, es, normalization.dynamic_node, normalization.dynamic_edge);
}

Tensor scale_columns(const Tensor& x, std::span<const double> factors) {
  if (x.cols() != factors.size()) throw DimensionError("scale_columns: factor count does not match the width");
  const std::size_t n = factors.size();
  std::vector<double> diag(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) diag[j * n + j] = factors[j];
  return matmul(x, Tensor::from({n, n}, std::move(diag)));
}

std::vector<Matrix> split_imputations(const Tensor& imputed, std::size_t graphs) {
  if (graphs == 0 || imputed.rows() % graphs != 0) throw DimensionError("split_imputations: uneven batch");
  const std::size_t K = imputed.rows() / graphs, w = imputed.cols();
  std::vector<Matrix> out;
  auto v = imputed.values();
  for (std::size_t g = 0; g < graphs; ++g) {
    out.emplace_back(K, w, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(g * K * w),
                                               v.begin() + static_cast<std::ptrdiff_t>((g + 1) * K * w)));
  }
  return out;
}

std::vector<Prediction> FdgnnModel::predict(std::span<const DatasetRecord* const> records) const {
  NoGradGuard guard;
  const GraphBatch sb = static_batch(records);
  const auto imputed = split_imputations(impute(sb), records.size());
  std::vector<Matrix> inflow;
  for (std::size_t i = 0; i < records.size(); ++i) {
    inflow.push_back(merge_imputation(masked_node_features(records[i]->static_graph), imputed[i]));
  }
  const GraphBatch db = dynamic_batch(records, inflow);
  const Tensor mu = regress_mu(db);
  const Tensor sigma = regress_sigma(db);
  std::vector<Prediction> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Prediction& p = out[i];
    p.imputed = imputed[i];
    p.mu_east = mu.at(i, 0);
    p.mu_west = mu.at(i, 1);
    p.sigma_east = sigma.at(i, 0);
    p.sigma_west = sigma.at(i, 1);
    p.pdf_east = discretize_pdf(p.mu_east, p.sigma_east);
    p.pdf_west = discretize_pdf(p.mu_west, p.sigma_west);
  }
  return out;
}

Prediction FdgnnModel::predict(const DatasetRecord& record) const {
  const DatasetRecord* one[] = {&record};
  return predict(one).front();
}

std::vector<Tensor> FdgnnModel::parameters() const {
  return concat({m_x_parameters(), m_mu_parameters(), m_sigma_parameters()});
}

std::size_t FdgnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

}  // namespace fdgnn

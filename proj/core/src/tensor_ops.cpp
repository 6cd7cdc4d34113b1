#include <algorithm>
#include <cmath>
#include <limits>

#include "fdgnn/errors.hpp"
#include "fdgnn/tensor.hpp"
#include "tensor_node.hpp"

namespace fdgnn {

using detail::make_result;
using detail::Node;

namespace {

// Parent adjoint buffer, or nullptr when the parent does not need one.
std::vector<double>* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.dim() != 2) {
    throw DimensionError(std::string(op) + " expects a 2-D tensor, got " + shape_to_string(t.shape()));
  }
}

enum class Broadcast { kSame, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.numel() == 1) return Broadcast::kLeftScalar;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                       shape_to_string(b.shape()));
}

// Elementwise binary op with scalar-or-same broadcasting. `df` returns the
// partial derivatives (d/da, d/db) at (x, y).
template <typename F, typename DF>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f, DF df) {
  const Broadcast kind = broadcast_kind(a, b, op);
  const Shape out_shape = kind == Broadcast::kLeftScalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(out_shape);
  auto av = a.values();
  auto bv = b.values();
  auto ai = [&](std::size_t i) { return kind == Broadcast::kLeftScalar ? av[0] : av[i]; };
  auto bi = [&](std::size_t i) { return kind == Broadcast::kRightScalar ? bv[0] : bv[i]; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(ai(i), bi(i));
  return make_result(out_shape, std::move(out), {a, b}, [kind, n, df](Node& self) {
    const auto& x = self.parents[0]->value;
    const auto& y = self.parents[1]->value;
    auto* ga = parent_grad(self, 0);
    auto* gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = kind == Broadcast::kLeftScalar ? x[0] : x[i];
      const double yi = kind == Broadcast::kRightScalar ? y[0] : y[i];
      const auto [dx, dy] = df(xi, yi);
      const double g = self.grad[i];
      if (ga) (*ga)[kind == Broadcast::kLeftScalar ? 0 : i] += g * dx;
      if (gb) (*gb)[kind == Broadcast::kRightScalar ? 0 : i] += g * dy;
    }
  });
}

// Elementwise unary op; `df(x, y)` is the derivative given input and output.
template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df) {
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_result(x.shape(), std::move(out), {x}, [df](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& in = self.parents[0]->value;
    for (std::size_t i = 0; i < in.size(); ++i) (*gx)[i] += self.grad[i] * df(in[i], self.value[i]);
  });
}

void check_index(std::span<const std::size_t> index, std::size_t bound, const char* op) {
  for (std::size_t i : index) {
    if (i >= bound) {
      throw DimensionError(std::string(op) + ": index " + std::to_string(i) + " out of range for " +
                           std::to_string(bound) + " rows");
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    const auto& G = self.grad;
    if (auto* ga = parent_grad(self, 0)) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (auto* gb = parent_grad(self, 1)) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * G[i * n + j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; },
                [](double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; },
                [](double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; },
                [](double x, double y) { return std::pair{y, x}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double y : b.values()) {
    if (y == 0.0) throw NumericError("div: division by exact zero");
  }
  return binary(a, b, "div", [](double x, double y) { return x / y; },
                [](double x, double y) { return std::pair{1.0 / y, -x / (y * y)}; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
  return unary(x, [negative_slope](double v) { return v > 0.0 ? v : negative_slope * v; },
               [negative_slope](double v, double) { return v > 0.0 ? 1.0 : negative_slope; });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input");
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.values()) {
    if (v < 0.0) throw NumericError("sqrt: negative input");
  }
  return unary(x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor softplus(const Tensor& x) {
  // log(1 + e^x) computed without overflow.
  return unary(x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
               [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (x.dim() == 0 || x.dim() > 2 || axis >= x.dim()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_to_string(x.shape()));
  }
  const std::size_t rows = x.rows(), cols = x.cols();
  // Normalize along `axis` of the logical rows×cols view.
  const bool along_cols = (x.dim() == 1) || axis == 1;
  const std::size_t groups = along_cols ? rows : cols;
  const std::size_t len = along_cols ? cols : rows;
  auto idx = [=](std::size_t g, std::size_t i) { return along_cols ? g * cols + i : i * cols + g; };
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, xv[idx(g, i)]);
    double z = 0.0;
    for (std::size_t i = 0; i < len; ++i) z += (out[idx(g, i)] = std::exp(xv[idx(g, i)] - mx));
    for (std::size_t i = 0; i < len; ++i) out[idx(g, i)] /= z;
  }
  return make_result(x.shape(), std::move(out), {x}, [groups, len, idx](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t k = 0; k < groups; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += g[idx(k, i)] * y[idx(k, i)];
      for (std::size_t i = 0; i < len; ++i) (*gx)[idx(k, i)] += y[idx(k, i)] * (g[idx(k, i)] - dot);
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (double& g : *gx) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of empty tensor");
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: shapes differ, " + shape_to_string(pred.shape()) + " vs " +
                         shape_to_string(target.shape()));
  }
  const Tensor d = sub(pred, target);
  return mean(mul(d, d));
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_2d(x, "add_row");
  const std::size_t m = x.rows(), n = x.cols();
  if (row.numel() != n || row.rows() != 1) {
    throw DimensionError("add_row: row " + shape_to_string(row.shape()) + " does not match " +
                         shape_to_string(x.shape()));
  }
  auto xv = x.values();
  auto rv = row.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + rv[j];
  return make_result({m, n}, std::move(out), {x, row}, [m, n](Node& self) {
    if (auto* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < m * n; ++i) (*gx)[i] += self.grad[i];
    if (auto* gr = parent_grad(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gr)[j] += self.grad[i * n + j];
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& w) {
  require_2d(x, "scale_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (w.numel() != m) {
    throw DimensionError("scale_rows: weights " + shape_to_string(w.shape()) + " do not match " +
                         shape_to_string(x.shape()));
  }
  auto xv = x.values();
  auto wv = w.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] * wv[i];
  return make_result({m, n}, std::move(out), {x, w}, [m, n](Node& self) {
    const auto& X = self.parents[0]->value;
    const auto& W = self.parents[1]->value;
    auto* gx = parent_grad(self, 0);
    auto* gw = parent_grad(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = self.grad[i * n + j];
        if (gx) (*gx)[i * n + j] += g * W[i];
        if (gw) (*gw)[i] += g * X[i * n + j];
      }
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_2d(x, "gather_rows");
  check_index(index, x.rows(), "gather_rows");
  const std::size_t n = x.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  auto xv = x.values();
  std::vector<double> out(idx.size() * n);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(idx[r] * n), n, out.begin() + static_cast<std::ptrdiff_t>(r * n));
  return make_result({idx.size(), n}, std::move(out), {x}, [idx, n](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) (*gx)[idx[r] * n + j] += self.grad[r * n + j];
  });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t out_rows) {
  require_2d(x, "scatter_add_rows");
  if (index.size() != x.rows()) {
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(x.rows()) + " rows");
  }
  check_index(index, out_rows, "scatter_add_rows");
  const std::size_t n = x.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  auto xv = x.values();
  std::vector<double> out(out_rows * n, 0.0);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[idx[r] * n + j] += xv[r * n + j];
  return make_result({out_rows, n}, std::move(out), {x}, [idx, n](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) (*gx)[r * n + j] += self.grad[idx[r] * n + j];
  });
}

Tensor segment_softmax(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments) {
  if (x.numel() != segment.size()) {
    throw DimensionError("segment_softmax: " + std::to_string(segment.size()) + " segment ids for " +
                         std::to_string(x.numel()) + " values");
  }
  check_index(segment, segments, "segment_softmax");
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  auto xv = x.values();
  std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < seg.size(); ++i) mx[seg[i]] = std::max(mx[seg[i]], xv[i]);
  std::vector<double> out(seg.size());
  std::vector<double> z(segments, 0.0);
  for (std::size_t i = 0; i < seg.size(); ++i) z[seg[i]] += (out[i] = std::exp(xv[i] - mx[seg[i]]));
  for (std::size_t i = 0; i < seg.size(); ++i) out[i] /= z[seg[i]];
  return make_result(x.shape(), std::move(out), {x}, [seg, segments](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& y = self.value;
    std::vector<double> dot(segments, 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) dot[seg[i]] += self.grad[i] * y[i];
    for (std::size_t i = 0; i < seg.size(); ++i) (*gx)[i] += y[i] * (self.grad[i] - dot[seg[i]]);
  });
}

Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments) {
  require_2d(x, "segment_mean");
  if (segment.size() != x.rows()) {
    throw DimensionError("segment_mean: " + std::to_string(segment.size()) + " segment ids for " +
                         std::to_string(x.rows()) + " rows");
  }
  check_index(segment, segments, "segment_mean");
  std::vector<double> count(segments, 0.0);
  for (std::size_t s : segment) count[s] += 1.0;
  for (std::size_t s = 0; s < segments; ++s) {
    if (count[s] == 0.0) throw DimensionError("segment_mean: segment " + std::to_string(s) + " is empty");
  }
  const std::size_t n = x.cols();
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  auto xv = x.values();
  std::vector<double> out(segments * n, 0.0);
  for (std::size_t r = 0; r < seg.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[seg[r] * n + j] += xv[r * n + j] / count[seg[r]];
  return make_result({segments, n}, std::move(out), {x}, [seg, count, n](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < seg.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) (*gx)[r * n + j] += self.grad[seg[r] * n + j] / count[seg[r]];
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = v[i * widths[k] + j];
    offset += widths[k];
  }
  return make_result({m, total}, std::move(out), {parts.begin(), parts.end()}, [m, widths, total](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (auto* g = parent_grad(self, k))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) (*g)[i * widths[k] + j] += self.grad[i * total + off + j];
      off += widths[k];
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::vector<std::size_t> sizes;
  std::vector<double> out;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_rows");
    if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
    sizes.push_back(p.numel());
    rows += p.rows();
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result({rows, n}, std::move(out), {parts.begin(), parts.end()}, [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (auto* g = parent_grad(self, k))
        for (std::size_t i = 0; i < sizes[k]; ++i) (*g)[i] += self.grad[off + i];
      off += sizes[k];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_2d(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (begin + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_to_string(x.shape()));
  }
  auto xv = x.values();
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * n + begin + j];
  return make_result({m, count}, std::move(out), {x}, [m, n, begin, count](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) (*gx)[i * n + begin + j] += self.grad[i * count + j];
  });
}

}  // namespace fdgnn

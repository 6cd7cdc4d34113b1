#pragma once

// Dense double-precision tensor with tape-based reverse-mode differentiation.
//
// Every operation on tensors that require gradients records its inputs and a
// local gradient rule on the output node. `backward()` collects the nodes
// reachable from a scalar loss in topological order, propagates adjoints in
// reverse, accumulates them into leaf tensors, and then releases the recorded
// graph. A second `backward()` on the same graph is an error: run the forward
// pass again first.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdgnn/matrix.hpp"

namespace fdgnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor();

  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from_matrix(const Matrix& m);
  // Trainable leaf tensor.
  static Tensor parameter(Shape shape, std::vector<double> values, std::string name);

  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t dim() const { return shape().size(); }
  // Row/column counts for 2-D tensors; a 1-D tensor is treated as one row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;
  Matrix to_matrix() const;

  bool requires_grad() const;
  bool is_leaf() const;
  const std::string& name() const;

  std::optional<std::span<const double>> grad() const;
  void zero_grad();

  // Direct access for optimizers and checkpoint loading. Leaves only.
  std::span<double> mutable_values();
  std::span<double> mutable_grad();

  // Same values, no history.
  Tensor detach() const;

  void backward() const;

  bool defined() const { return static_cast<bool>(node_); }
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Used by operation implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// ---------------------------------------------------------------------------
// Operations. Binary elementwise ops accept identical shapes or a one-element
// operand broadcast against the other; anything else is a DimensionError.

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double negative_slope);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor softplus(const Tensor& x);

// Softmax along `axis` of a 1-D or 2-D tensor, max-subtracted.
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// x[m×n] + b[1×n] applied to every row.
Tensor add_row(const Tensor& x, const Tensor& row);
// x[m×n] scaled row-wise by w[m×1].
Tensor scale_rows(const Tensor& x, const Tensor& w);

// Message-passing primitives over row indices.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t out_rows);
// Softmax of a column vector x[E×1] within groups defined by `segment`.
Tensor segment_softmax(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments);
// Mean of rows within each segment; every segment must be nonempty.
Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

}  // namespace fdgnn

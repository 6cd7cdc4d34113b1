#include "fdgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fdgnn/errors.hpp"
#include "tensor_node.hpp"

namespace fdgnn {

namespace {
thread_local bool g_grad_enabled = true;

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  check_finite(node->value, "operation output");
  bool track = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) {
      if (in.node()->consumed) {
        throw Error("operation input belongs to a graph already consumed by backward()");
      }
      node->parents.push_back(in.node());
    }
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) { node_->shape = {0}; }

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  check_finite(values, "tensor construction");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::from_matrix(const Matrix& m) { return from({m.rows(), m.cols()}, m.data()); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values, std::string name) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->name = std::move(name);
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  throw DimensionError("rows() requires a 1-D or 2-D tensor, got " + shape_to_string(s));
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw DimensionError("cols() requires a 1-D or 2-D tensor, got " + shape_to_string(s));
}

std::span<const double> Tensor::values() const { return node_->value; }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t i) const { return node_->value.at(i); }
double Tensor::at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), node_->value); }

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->leaf; }
const std::string& Tensor::name() const { return node_->name; }

std::optional<std::span<const double>> Tensor::grad() const {
  if (node_->grad.empty()) return std::nullopt;
  return std::span<const double>(node_->grad);
}

void Tensor::zero_grad() { node_->grad.clear(); }

std::span<double> Tensor::mutable_values() {
  if (!node_->leaf) throw Error("mutable_values() is only available on leaf tensors");
  return node_->value;
}

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

Tensor Tensor::detach() const { return from(shape(), node_->value); }

void Tensor::backward() const {
  if (numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_to_string(shape()));
  }
  if (node_->consumed) {
    throw Error("backward() already ran on this graph; run the forward pass again");
  }
  if (!node_->requires_grad) throw Error("backward() on a tensor that does not require grad");

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->leaf) continue;
    if (!n->grad.empty() && n->backward_fn) n->backward_fn(*n);
  }

  for (detail::Node* n : order) {
    if (n->leaf) continue;
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->backward_fn = nullptr;
    n->parents.clear();
    n->consumed = true;
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

}  // namespace fdgnn

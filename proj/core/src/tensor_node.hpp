#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fdgnn/tensor.hpp"

namespace fdgnn::detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  // Empty until an adjoint is accumulated.
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

// Builds a result node. Records history only when grad mode is on and at
// least one input requires grad.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

}  // namespace fdgnn::detail

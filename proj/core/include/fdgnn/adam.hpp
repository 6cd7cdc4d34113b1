#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdgnn/tensor.hpp"

namespace fdgnn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Adam with bias correction over a fixed list of leaf parameters. A parameter
// whose grad was never populated is stepped with a zero gradient.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void step();
  void zero_grad();

  const std::vector<Tensor>& params() const { return params_; }
  const AdamState& state() const { return state_; }
  // Replaces moments and step counter; shapes must match the parameters.
  void load_state(AdamState state);

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace fdgnn

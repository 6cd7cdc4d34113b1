#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fdgnn/tensor.hpp"

namespace fdgnn::testing {

// Largest relative error between the tape gradient of f at each input and a
// central finite difference with step h. f must return a scalar. The
// denominator is floored at `floor` so exact zeros compare absolutely.
inline double max_grad_error(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                             const std::vector<Tensor>& inputs, double h = 1e-5, double floor = 1e-6) {
  for (const auto& t : inputs) const_cast<Tensor&>(t).zero_grad();
  f(inputs).backward();
  double worst = 0.0;
  for (const auto& t : inputs) {
    auto grad = t.grad();
    std::vector<double> analytic(t.numel(), 0.0);
    if (grad) std::copy(grad->begin(), grad->end(), analytic.begin());
    auto vals = const_cast<Tensor&>(t).mutable_values();
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double orig = vals[i];
      double fp, fm;
      {
        NoGradGuard guard;
        vals[i] = orig + h;
        fp = f(inputs).item();
        vals[i] = orig - h;
        fm = f(inputs).item();
      }
      vals[i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double err = std::abs(numeric - analytic[i]) / std::max({floor, std::abs(numeric), std::abs(analytic[i])});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace fdgnn::testing

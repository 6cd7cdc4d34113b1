#include "fdgnn/adam.hpp"

#include <cmath>

#include "fdgnn/errors.hpp"

namespace fdgnn {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)) {
  if (!(options.learning_rate >= 0.0)) throw ConfigError("Adam: learning rate must be >= 0");
  state_.options = options;
  for (const auto& p : params_) {
    if (!p.is_leaf() || !p.requires_grad()) throw Error("Adam: parameter '" + p.name() + "' is not a trainable leaf");
    state_.first_moment.emplace_back(p.numel(), 0.0);
    state_.second_moment.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (auto g = p.grad()) {
      for (double v : *g) {
        if (std::isnan(v)) throw NumericError("Adam: NaN gradient in parameter '" + p.name() + "'");
      }
    }
  }
  const auto& o = state_.options;
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    auto g = p.grad();
    auto values = p.mutable_values();
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      values[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::load_state(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
    throw DataError("Adam: optimizer state has " + std::to_string(state.first_moment.size()) +
                    " entries for " + std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (state.first_moment[k].size() != params_[k].numel() || state.second_moment[k].size() != params_[k].numel()) {
      throw DataError("Adam: optimizer state shape mismatch for '" + params_[k].name() + "'");
    }
  }
  state_ = std::move(state);
}

}  // namespace fdgnn

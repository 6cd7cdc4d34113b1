#include "fdgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdgnn/errors.hpp"

namespace fdgnn {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* metric) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(metric) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  if (a.empty()) throw NumericError(std::string(metric) + ": empty input");
}

}  // namespace

double mape(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "mape");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (std::abs(y_true[i]) < kMapeZeroThreshold) continue;
    sum += std::abs(y_pred[i] - y_true[i]) / std::abs(y_true[i]);
    ++n;
  }
  if (n == 0) throw NumericError("mape: undefined, every true value is zero");
  return 100.0 * sum / static_cast<double>(n);
}

double std_error(double sigma_true, double sigma_pred) { return std::abs(sigma_true - sigma_pred); }

double hellinger(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "hellinger");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0.0 || y_pred[i] < 0.0) throw NumericError("hellinger: negative value at index " + std::to_string(i));
    const double d = std::sqrt(y_true[i]) - std::sqrt(y_pred[i]);
    sum += d * d;
  }
  return std::sqrt(sum) / std::sqrt(2.0);
}

double nrmse(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "nrmse");
  const auto [lo, hi] = std::minmax_element(y_true.begin(), y_true.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw NumericError("nrmse: undefined for constant y_true");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) sum += (y_pred[i] - y_true[i]) * (y_pred[i] - y_true[i]);
  return std::sqrt(sum / static_cast<double>(y_true.size())) / range;
}

}  // namespace fdgnn

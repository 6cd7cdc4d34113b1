#pragma once

#include <span>

namespace fdgnn {

// Bins whose true density is below this are left out of the MAPE mean.
inline constexpr double kMapeZeroThreshold = 1e-12;

// Mean absolute percentage error in percent. NumericError when every bin is excluded.
double mape(std::span<const double> y_true, std::span<const double> y_pred);

double std_error(double sigma_true, double sigma_pred);

// (1/sqrt 2) · || sqrt(p) - sqrt(q) ||_2 on the vectors as given.
double hellinger(std::span<const double> y_true, std::span<const double> y_pred);

// RMSE / (max(y_true) - min(y_true)). NumericError on constant y_true.
double nrmse(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace fdgnn

#include <cmath>

#include "ffsense/error.hpp"
#include "ffsense/metrics/metrics.hpp"

namespace ffsense::metrics {

namespace {
void check_lengths(std::span<const double> a, std::span<const double> p, std::size_t min) {
  if (a.size() != p.size())
    throw DomainError("regression: " + std::to_string(a.size()) + " actual vs " + std::to_string(p.size()) +
                      " predicted values");
  if (a.size() < min) throw DomainError("regression: need at least " + std::to_string(min) + " values");
}
}  // namespace

double mean_absolute_error(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

double mean_squared_error(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    s += d * d;
  }
  return s / static_cast<double>(actual.size());
}

RegressionReport regression_report(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 2);
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (ss_tot == 0.0) throw DomainError("regression: actual values have zero variance, r2 is undefined");
  return RegressionReport{1.0 - ss_res / ss_tot, mean_absolute_error(actual, predicted),
                          mean_squared_error(actual, predicted)};
}

}  // namespace ffsense::metrics

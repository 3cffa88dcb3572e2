#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "robustcov/errors.hpp"

namespace robustcov {

/// Linear-interpolation sample quantile (the numpy/R type-7 convention):
/// q(p) sits at fractional order statistic (n-1)*p. `p` must lie in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidInputError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInputError("quantile: p outside [0,1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = p * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> sample, double p) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

/// Sample median; the average of the two central order statistics for even n.
inline double median(std::span<const double> sample) {
  return quantile(sample, 0.5);
}

/// Interquartile range q(0.75) - q(0.25) under the type-7 convention.
inline double iqr(std::span<const double> sample) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
}

inline double mean(std::span<const double> sample) {
  if (sample.empty()) throw InvalidInputError("mean: empty sample");
  double acc = 0.0;
  for (double x : sample) acc += x;
  return acc / static_cast<double>(sample.size());
}

/// Population (1/n) variance.
inline double variance(std::span<const double> sample) {
  double m = mean(sample);
  double acc = 0.0;
  for (double x : sample) acc += (x - m) * (x - m);
  return acc / static_cast<double>(sample.size());
}

inline double stddev(std::span<const double> sample) {
  return std::sqrt(variance(sample));
}

}  // namespace robustcov

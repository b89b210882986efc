#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace appeval::stats {

/// Median; even counts average the two middle values.
inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Linear-interpolation quantile on sorted data (Hyndman–Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double root_mean_square(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  // Shifted by the first value so identical inputs give exactly zero.
  const double shift = values.front();
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    sum += v - shift;
    sum_sq += (v - shift) * (v - shift);
  }
  const double n = static_cast<double>(values.size());
  return std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)));
}

}  // namespace appeval::stats

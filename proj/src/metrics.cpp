#include "qosgp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "qosgp/errors.hpp"

namespace qosgp {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty()) throw InvalidInput(std::string(what) + ": empty input");
  if (a.size() != b.size()) {
    throw InvalidInput(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> truths) {
  check_pair(predictions, truths, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::abs(predictions[i] - truths[i]);
  return s / static_cast<double>(predictions.size());
}

double mse(std::span<const double> predictions, std::span<const double> truths) {
  check_pair(predictions, truths, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    s += e * e;
  }
  return s / static_cast<double>(predictions.size());
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  require(!sorted.empty(), "quantile: empty input");
  require(prob >= 0.0 && prob <= 1.0, "quantile: probability outside [0, 1]");
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats summary_stats(std::span<const double> values) {
  require(!values.empty(), "summary_stats: empty input");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxStats b;
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  b.min = s.front();
  b.max = s.back();
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (double v : s) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  return b;
}

}  // namespace qosgp

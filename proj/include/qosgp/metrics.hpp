#pragma once

#include <span>
#include <vector>

namespace qosgp {

double mae(std::span<const double> predictions, std::span<const double> truths);
double mse(std::span<const double> predictions, std::span<const double> truths);

// Box-and-whisker summary. Quartiles use linear interpolation between order
// statistics (type 7); outliers lie beyond 1.5 IQR from the box and the
// whiskers span the remaining values.
struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

// Type-7 quantile of already sorted values, prob in [0, 1].
double quantile_sorted(std::span<const double> sorted, double prob);

BoxStats summary_stats(std::span<const double> values);

}  // namespace qosgp

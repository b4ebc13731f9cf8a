#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "qosgp/gp.hpp"
#include "qosgp/kernel.hpp"

namespace qosgp::test {

inline PointSet uniform_points(std::mt19937_64& rng, Eigen::Index n, int dim, double lo = 0.0,
                               double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  PointSet X(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) X(i, d) = u(rng);
  return X;
}

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline KernelConfig random_kernel(std::mt19937_64& rng, KernelVariant variant, int dim,
                                  double spread = 0.7) {
  const int P = KernelConfig::parameter_count(variant, dim);
  return KernelConfig(variant, dim, uniform_vector(rng, P, -spread, spread));
}

inline Dataset random_dataset(std::mt19937_64& rng, Eigen::Index n, int dim) {
  Dataset d{uniform_points(rng, n, dim, 0.0, 3.0), Vector()};
  d.y = uniform_vector(rng, n, -2.0, 2.0);
  return d;
}

// |a - b| scaled by max(|b|, floor).
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline constexpr KernelVariant kAllVariants[] = {
    KernelVariant::Linear, KernelVariant::SquaredExponential, KernelVariant::Composite};

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qosgp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qosgp::test

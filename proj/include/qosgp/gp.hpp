#pragma once

#include <cstdint>
#include <vector>

#include "qosgp/kernel.hpp"

namespace qosgp {

/// Regression data: one row of X per observation, one target per row.
struct Dataset {
  PointSet X;
  Vector y;

  Eigen::Index size() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }

  // Throws InvalidInput unless N >= 1, sizes agree, and every entry is finite
  // with nonnegative features.
  void validate() const;

  Dataset rows(Eigen::Index begin, Eigen::Index count) const;
  Dataset select(const std::vector<Eigen::Index>& indices) const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Diagonal jitter relative to trace(C)/N: the first attempt uses the base
// value, each failure multiplies by ten until the ceiling is exceeded.
inline constexpr double kJitterBase = 1e-10;
inline constexpr double kJitterCeiling = 1e-4;
// Predictive variances in (-kVarianceClamp, 0) are round-off and clamp to zero.
inline constexpr double kVarianceClamp = 1e-8;

/// Cholesky factor of a symmetric matrix with the escalating jitter policy.
struct JitteredCholesky {
  Matrix lower;
  double jitter = 0.0;  // absolute amount added to the diagonal
};
JitteredCholesky jittered_cholesky(const Matrix& A);

/// A fitted GP. Immutable once constructed; predict is safe from multiple threads.
class TrainedModel {
 public:
  TrainedModel(Dataset dataset, KernelConfig kernel, double noise_variance);

  const Dataset& dataset() const { return dataset_; }
  const KernelConfig& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  const Matrix& chol_factor() const { return chol_; }
  const Vector& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

  // C = K + noise I (without jitter).
  Matrix covariance() const;

  Prediction predict(const Eigen::Ref<const Vector>& x) const;
  std::vector<Prediction> predict_many(const PointSet& Z) const;

  // -1/2 ln|C| - 1/2 y'C^-1 y - N/2 ln 2 pi, with ln|C| from the factor diagonal.
  double log_marginal_likelihood() const;

  // d lml / d log theta for every kernel log-parameter, followed by
  // d lml / d log(noise variance) when include_noise is set.
  Vector lml_gradient(bool include_noise = true) const;

  // C^-1 from the triangular factor.
  Matrix inverse_covariance() const;
  // Same, with only the lower triangle meaningful.
  Matrix inverse_covariance_lower() const;

 private:
  Dataset dataset_;
  KernelConfig kernel_;
  double noise_variance_;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

TrainedModel fit(const Dataset& dataset, const KernelConfig& kernel, double noise_variance);

struct OptimizerOptions {
  int max_iterations = 200;
  // Converged once the relative LML improvement of an accepted step drops below this.
  double tolerance = 1e-7;
  // Also stop when max |gradient| falls below this (0 disables the check).
  double gradient_tolerance = 0.0;
  // Extra starting points, each the initial log-parameters perturbed by U(-1, 1).
  int restarts = 3;
  double perturbation = 1.0;
  bool learn_noise = true;
  std::uint64_t seed = 0;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct OptimizationResult {
  KernelConfig kernel;
  double noise_variance = 0.0;
  double log_marginal_likelihood = 0.0;
  double initial_log_marginal_likelihood = 0.0;
  int iterations = 0;  // accepted steps of the winning start
  // Accepted LML values of the winning start, starting with its initial value.
  std::vector<double> accepted;
};

/// Type-2 maximum likelihood by gradient ascent in log-space with an Armijo
/// backtracking line search, over the initial point plus `restarts` perturbed starts.
OptimizationResult optimize_hyperparameters(const Dataset& dataset, const KernelConfig& kernel,
                                            double noise_variance,
                                            const OptimizerOptions& options);

/// `count` draws from N(0, K + jitter I), one vector of length N per draw.
std::vector<Vector> sample_prior(const KernelConfig& kernel, const PointSet& X, int count,
                                 std::uint64_t seed);

}  // namespace qosgp

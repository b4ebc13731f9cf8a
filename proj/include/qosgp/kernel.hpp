#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace qosgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Rows are points, columns are input dimensions.
using PointSet = Eigen::MatrixXd;

enum class KernelVariant { Linear, SquaredExponential, Composite };

std::string_view to_string(KernelVariant variant);
KernelVariant parse_kernel_variant(std::string_view name);

/// Covariance function with hyperparameters stored as natural logarithms.
///
/// Parameter layout, with D = input_dim:
///   Linear              [log a_1 .. log a_D]                      k = sum_d x_d x'_d / a_d^2
///   SquaredExponential  [log l_1 .. log l_D, log sigma_f]         k = sigma_f^2 exp(-r^2 / 2),
///                                                                 r^2 = sum_d (x_d - x'_d)^2 / l_d^2
///   Composite           [SE block, Linear block, log b]           k = k_se + k_lin + b
class KernelConfig {
 public:
  KernelConfig(KernelVariant variant, int input_dim, Vector log_params);

  // All log-parameters zero, i.e. every decoded hyperparameter equal to one.
  static KernelConfig with_defaults(KernelVariant variant, int input_dim);

  // Composite kernel theta0 exp(-theta1/2 |x-x'|^2) + theta2 + theta3 x.x' with
  // isotropic scales. Zero coefficients are floored at the smallest normal double
  // so the log-space representation stays finite.
  static KernelConfig composite_from_coefficients(int input_dim, double theta0, double theta1,
                                                  double theta2, double theta3);

  static int parameter_count(KernelVariant variant, int input_dim);

  KernelVariant variant() const { return variant_; }
  int input_dim() const { return input_dim_; }
  const Vector& log_params() const { return log_params_; }
  int num_params() const { return static_cast<int>(log_params_.size()); }
  std::vector<std::string> parameter_names() const;

  KernelConfig with_log_params(const Vector& log_params) const;

  // k(x, x2).
  double eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2) const;

  // N x N Gram matrix over the rows of X.
  Matrix gram(const PointSet& X) const;

  // N x M cross-covariance between rows of X and rows of Z.
  Matrix cross(const PointSet& X, const PointSet& Z) const;

  // k(z, z) for every row of Z.
  Vector diagonal(const PointSet& Z) const;

  // dK/d(log theta_i) for each hyperparameter, in log_params order.
  std::vector<Matrix> grad_theta(const PointSet& X) const;

  // sum_{n,m} W[n,m] dK[n,m]/d(log theta_i) for each i, without materializing
  // the derivative matrices. W must be symmetric N x N; only its lower triangle is read.
  Vector contract_gradient(const PointSet& X, const Matrix& W) const;

 private:
  struct Decoded {
    Vector se_inv_sq;   // 1 / l_d^2
    double signal = 0;  // sigma_f^2
    Vector lin_inv_sq;  // 1 / a_d^2
    double bias = 0;    // b
    bool has_se = false;
    bool has_lin = false;
  };

  void check_dim(Eigen::Index cols, const char* what) const;
  // out[i] = k(X.row(begin + i), z) for the trailing rows of X.
  void column(const PointSet& X, const Eigen::Ref<const Vector>& z, Eigen::Index begin,
              Eigen::Ref<Vector> out) const;
  // k on two contiguous D-vectors.
  double pair(const double* x, const double* x2) const;
  int se_offset() const { return 0; }
  int lin_offset() const;

  KernelVariant variant_;
  int input_dim_;
  Vector log_params_;
  Decoded decoded_;
};

}  // namespace qosgp

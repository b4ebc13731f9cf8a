#include "qosgp/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qosgp/errors.hpp"

namespace qosgp {

std::string_view to_string(KernelVariant variant) {
  switch (variant) {
    case KernelVariant::Linear: return "linear";
    case KernelVariant::SquaredExponential: return "se";
    case KernelVariant::Composite: return "composite";
  }
  return "unknown";
}

KernelVariant parse_kernel_variant(std::string_view name) {
  if (name == "linear" || name == "lin") return KernelVariant::Linear;
  if (name == "se" || name == "squared_exponential") return KernelVariant::SquaredExponential;
  if (name == "composite") return KernelVariant::Composite;
  throw InvalidInput("unknown kernel variant '" + std::string(name) +
                     "' (expected linear, se or composite)");
}

int KernelConfig::parameter_count(KernelVariant variant, int input_dim) {
  switch (variant) {
    case KernelVariant::Linear: return input_dim;
    case KernelVariant::SquaredExponential: return input_dim + 1;
    case KernelVariant::Composite: return 2 * input_dim + 2;
  }
  return 0;
}

KernelConfig::KernelConfig(KernelVariant variant, int input_dim, Vector log_params)
    : variant_(variant), input_dim_(input_dim), log_params_(std::move(log_params)) {
  require(input_dim_ > 0, "kernel input_dim must be positive");
  const int expected = parameter_count(variant_, input_dim_);
  if (log_params_.size() != expected) {
    std::ostringstream os;
    os << to_string(variant_) << " kernel with input_dim " << input_dim_ << " needs " << expected
       << " log-parameters, got " << log_params_.size();
    throw InvalidInput(os.str());
  }
  for (Eigen::Index i = 0; i < log_params_.size(); ++i) {
    const double v = std::exp(log_params_[i]);
    if (!std::isfinite(log_params_[i]) || !std::isfinite(v) || v <= 0.0) {
      std::ostringstream os;
      os << "kernel log-parameter " << i << " = " << log_params_[i]
         << " does not decode to a finite positive value";
      throw InvalidInput(os.str());
    }
  }

  const int D = input_dim_;
  decoded_.has_se = variant_ != KernelVariant::Linear;
  decoded_.has_lin = variant_ != KernelVariant::SquaredExponential;
  if (decoded_.has_se) {
    decoded_.se_inv_sq = (-2.0 * log_params_.segment(se_offset(), D)).array().exp();
    decoded_.signal = std::exp(2.0 * log_params_[D]);
  }
  if (decoded_.has_lin) {
    decoded_.lin_inv_sq = (-2.0 * log_params_.segment(lin_offset(), D)).array().exp();
  }
  if (variant_ == KernelVariant::Composite) decoded_.bias = std::exp(log_params_[2 * D + 1]);
}

KernelConfig KernelConfig::with_defaults(KernelVariant variant, int input_dim) {
  require(input_dim > 0, "kernel input_dim must be positive");
  return KernelConfig(variant, input_dim, Vector::Zero(parameter_count(variant, input_dim)));
}

KernelConfig KernelConfig::composite_from_coefficients(int input_dim, double theta0,
                                                       double theta1, double theta2,
                                                       double theta3) {
  require(theta0 >= 0 && theta1 >= 0 && theta2 >= 0 && theta3 >= 0,
          "composite coefficients must be nonnegative");
  const double floor = std::numeric_limits<double>::min();
  auto lg = [floor](double v) { return std::log(std::max(v, floor)); };
  const int D = input_dim;
  Vector p(2 * D + 2);
  // theta1 = 1 / l^2, theta3 = 1 / a^2.
  p.segment(0, D).setConstant(-0.5 * lg(theta1));
  p[D] = 0.5 * lg(theta0);
  p.segment(D + 1, D).setConstant(-0.5 * lg(theta3));
  p[2 * D + 1] = lg(theta2);
  return KernelConfig(KernelVariant::Composite, D, p);
}

int KernelConfig::lin_offset() const {
  return variant_ == KernelVariant::Composite ? input_dim_ + 1 : 0;
}

std::vector<std::string> KernelConfig::parameter_names() const {
  std::vector<std::string> names;
  const int D = input_dim_;
  if (decoded_.has_se) {
    for (int d = 0; d < D; ++d) names.push_back("se_length_scale_" + std::to_string(d + 1));
    names.push_back("se_signal_sd");
  }
  if (decoded_.has_lin) {
    for (int d = 0; d < D; ++d) names.push_back("linear_scale_" + std::to_string(d + 1));
  }
  if (variant_ == KernelVariant::Composite) names.push_back("bias");
  return names;
}

KernelConfig KernelConfig::with_log_params(const Vector& log_params) const {
  return KernelConfig(variant_, input_dim_, log_params);
}

void KernelConfig::check_dim(Eigen::Index cols, const char* what) const {
  if (cols != input_dim_) {
    std::ostringstream os;
    os << what << ": input dimension " << cols << " does not match kernel input_dim "
       << input_dim_;
    throw InvalidInput(os.str());
  }
}

double KernelConfig::eval(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& x2) const {
  check_dim(x.size(), "kernel eval");
  check_dim(x2.size(), "kernel eval");
  const Vector a = x, b = x2;
  return pair(a.data(), b.data());
}

namespace {

// Same arithmetic as eval, on raw column pointers of a transposed point set.
double se_r2(const double* a, const double* b, const double* inv_sq, int D) {
  double r2 = 0.0;
  for (int d = 0; d < D; ++d) {
    const double diff = a[d] - b[d];
    r2 += diff * diff * inv_sq[d];
  }
  return r2;
}

double lin_dot(const double* a, const double* b, const double* inv_sq, int D) {
  double s = 0.0;
  for (int d = 0; d < D; ++d) s += a[d] * b[d] * inv_sq[d];
  return s;
}

}  // namespace

void KernelConfig::column(const PointSet& X, const Eigen::Ref<const Vector>& z, Eigen::Index begin,
                          Eigen::Ref<Vector> out) const {
  const Eigen::Index len = X.rows() - begin;
  auto o = out.array();
  o.setConstant(decoded_.bias);
  if (decoded_.has_se) {
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(len);
    for (int d = 0; d < input_dim_; ++d) {
      r2 += (X.col(d).segment(begin, len).array() - z[d]).square() * decoded_.se_inv_sq[d];
    }
    o += decoded_.signal * (-0.5 * r2).exp();
  }
  if (decoded_.has_lin) {
    for (int d = 0; d < input_dim_; ++d) {
      o += X.col(d).segment(begin, len).array() * (z[d] * decoded_.lin_inv_sq[d]);
    }
  }
}

Matrix KernelConfig::gram(const PointSet& X) const {
  require(X.rows() >= 1, "gram: point set is empty");
  check_dim(X.cols(), "gram");
  const Eigen::Index N = X.rows();
  Matrix K(N, N);
  for (Eigen::Index m = 0; m < N; ++m) {
    const Vector xm = X.row(m).transpose();
    column(X, xm, m, K.col(m).segment(m, N - m));
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return K;
}

double KernelConfig::pair(const double* x, const double* x2) const {
  const int D = input_dim_;
  double k = decoded_.bias;
  if (decoded_.has_se) k += decoded_.signal * std::exp(-0.5 * se_r2(x, x2, decoded_.se_inv_sq.data(), D));
  if (decoded_.has_lin) k += lin_dot(x, x2, decoded_.lin_inv_sq.data(), D);
  return k;
}

Matrix KernelConfig::cross(const PointSet& X, const PointSet& Z) const {
  check_dim(X.cols(), "cross-covariance");
  check_dim(Z.cols(), "cross-covariance");
  Matrix K(X.rows(), Z.rows());
  for (Eigen::Index m = 0; m < Z.rows(); ++m) {
    const Vector zm = Z.row(m).transpose();
    column(X, zm, 0, K.col(m));
  }
  return K;
}

Vector KernelConfig::diagonal(const PointSet& Z) const {
  check_dim(Z.cols(), "kernel diagonal");
  const Matrix Zt = Z.transpose();
  Vector d(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) d[i] = pair(Zt.col(i).data(), Zt.col(i).data());
  return d;
}

std::vector<Matrix> KernelConfig::grad_theta(const PointSet& X) const {
  require(X.rows() >= 1, "grad_theta: point set is empty");
  check_dim(X.cols(), "grad_theta");
  const Eigen::Index N = X.rows();
  const int D = input_dim_;
  std::vector<Matrix> grads(num_params(), Matrix::Zero(N, N));

  if (decoded_.has_se) {
    for (Eigen::Index m = 0; m < N; ++m) {
      for (Eigen::Index n = m; n < N; ++n) {
        const Eigen::ArrayXd scaled =
            (X.row(n) - X.row(m)).transpose().array().square() * decoded_.se_inv_sq.array();
        const double kse = decoded_.signal * std::exp(-0.5 * scaled.sum());
        for (int d = 0; d < D; ++d) {
          grads[se_offset() + d](n, m) = grads[se_offset() + d](m, n) = kse * scaled[d];
        }
        grads[D](n, m) = grads[D](m, n) = 2.0 * kse;
      }
    }
  }
  if (decoded_.has_lin) {
    for (int d = 0; d < D; ++d) {
      Matrix& G = grads[lin_offset() + d];
      G.noalias() = X.col(d) * X.col(d).transpose();
      G *= -2.0 * decoded_.lin_inv_sq[d];
    }
  }
  if (variant_ == KernelVariant::Composite) grads[2 * D + 1].setConstant(decoded_.bias);
  return grads;
}

Vector KernelConfig::contract_gradient(const PointSet& X, const Matrix& W) const {
  check_dim(X.cols(), "contract_gradient");
  const Eigen::Index N = X.rows();
  require(W.rows() == N && W.cols() == N, "contract_gradient: weight matrix must be N x N");
  const int D = input_dim_;
  Vector g = Vector::Zero(num_params());

  if (decoded_.has_se) {
    // Only the lower triangle of W is read; W is symmetric.
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(D);
    double acc_signal = decoded_.signal * W.diagonal().sum();
    Eigen::ArrayXXd scaled(N, D);
    for (Eigen::Index m = 0; m + 1 < N; ++m) {
      const Eigen::Index len = N - m - 1;
      auto sc = scaled.topRows(len);
      for (int d = 0; d < D; ++d) {
        sc.col(d) = (X.col(d).segment(m + 1, len).array() - X(m, d)).square() *
                    decoded_.se_inv_sq[d];
      }
      const Eigen::ArrayXd wk = 2.0 * decoded_.signal *
                                W.col(m).segment(m + 1, len).array() *
                                (-0.5 * sc.rowwise().sum()).exp();
      for (int d = 0; d < D; ++d) acc[d] += (wk * sc.col(d)).sum();
      acc_signal += wk.sum();
    }
    g.segment(se_offset(), D) = acc.matrix();
    g[D] = 2.0 * acc_signal;
  }
  if (decoded_.has_lin) {
    for (int d = 0; d < D; ++d) {
      g[lin_offset() + d] = -2.0 * decoded_.lin_inv_sq[d] * X.col(d).dot(W.selfadjointView<Eigen::Lower>() * X.col(d));
    }
  }
  if (variant_ == KernelVariant::Composite) {
    double total = 0.0;
    for (Eigen::Index m = 0; m < N; ++m) total += W(m, m) + 2.0 * W.col(m).tail(N - m - 1).sum();
    g[2 * D + 1] = decoded_.bias * total;
  }
  return g;
}

}  // namespace qosgp

#include "qosgp/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qosgp/errors.hpp"
#include "qosgp/rng.hpp"

namespace qosgp {

void Dataset::validate() const {
  require(X.rows() >= 1, "dataset is empty");
  require(X.cols() >= 1, "dataset has no feature columns");
  if (X.rows() != y.size()) {
    std::ostringstream os;
    os << "dataset has " << X.rows() << " feature rows but " << y.size() << " targets";
    throw InvalidInput(os.str());
  }
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    if (!std::isfinite(y[n])) {
      throw InvalidInput("dataset target " + std::to_string(n) + " is not finite");
    }
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
      const double v = X(n, d);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "dataset feature (" << n << ", " << d << ") = " << v
           << " must be finite and nonnegative";
        throw InvalidInput(os.str());
      }
    }
  }
}

Dataset Dataset::rows(Eigen::Index begin, Eigen::Index count) const {
  require(begin >= 0 && count >= 0 && begin + count <= X.rows(), "dataset row range out of bounds");
  return Dataset{X.middleRows(begin, count), y.segment(begin, count)};
}

Dataset Dataset::select(const std::vector<Eigen::Index>& indices) const {
  Dataset out{PointSet(static_cast<Eigen::Index>(indices.size()), X.cols()),
              Vector(static_cast<Eigen::Index>(indices.size()))};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = indices[i];
    require(src >= 0 && src < X.rows(), "dataset row index out of bounds");
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(src);
    out.y[static_cast<Eigen::Index>(i)] = y[src];
  }
  return out;
}

JitteredCholesky jittered_cholesky(const Matrix& A) {
  require(A.rows() == A.cols() && A.rows() >= 1, "cholesky: matrix must be square and non-empty");
  const Eigen::Index N = A.rows();
  const double scale = A.trace() / static_cast<double>(N);
  if (!std::isfinite(scale)) throw NumericalError("cholesky: matrix trace is not finite");
  // A zero-trace matrix still gets an absolute floor so the first attempt can succeed.
  const double unit = scale > 0.0 ? scale : 1.0;
  double rel = kJitterBase;
  double jitter = 0.0;
  Matrix work;
  while (rel <= kJitterCeiling * (1.0 + 1e-9)) {
    jitter = rel * unit;
    work = A;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::Ref<Matrix>> llt(work);
    if (llt.info() == Eigen::Success &&
        (work.diagonal().array() > 0.0).all() && work.diagonal().allFinite()) {
      work.triangularView<Eigen::StrictlyUpper>().setZero();
      return JitteredCholesky{std::move(work), jitter};
    }
    rel *= 10.0;
  }
  std::ostringstream os;
  os << "cholesky failed after jitter escalation; final jitter tried " << jitter << " ("
     << rel / 10.0 << " x trace/N)";
  throw NumericalError(os.str());
}

TrainedModel::TrainedModel(Dataset dataset, KernelConfig kernel, double noise_variance)
    : dataset_(std::move(dataset)), kernel_(std::move(kernel)), noise_variance_(noise_variance) {
  if (!(noise_variance_ > 0.0) || !std::isfinite(noise_variance_)) {
    std::ostringstream os;
    os << "noise variance must be finite and > 0, got " << noise_variance_;
    throw InvalidInput(os.str());
  }
  dataset_.validate();
  if (dataset_.dim() != kernel_.input_dim()) {
    std::ostringstream os;
    os << "dataset dimension " << dataset_.dim() << " does not match kernel input_dim "
       << kernel_.input_dim();
    throw InvalidInput(os.str());
  }
  auto factor = jittered_cholesky(covariance());
  chol_ = std::move(factor.lower);
  jitter_ = factor.jitter;
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(dataset_.y);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

Matrix TrainedModel::covariance() const {
  Matrix C = kernel_.gram(dataset_.X);
  C.diagonal().array() += noise_variance_;
  return C;
}

namespace {

constexpr Eigen::Index kBlock = 64;

// In-place inverse of the lower triangle by 2x2 block recursion.
void invert_lower(Eigen::Ref<Matrix> T) {
  const Eigen::Index n = T.rows();
  if (n <= kBlock) {
    Matrix I = Matrix::Identity(n, n);
    T.triangularView<Eigen::Lower>().solveInPlace(I);
    T.triangularView<Eigen::Lower>() = I;
    return;
  }
  const Eigen::Index n1 = n / 2, n2 = n - n1;
  invert_lower(T.topLeftCorner(n1, n1));
  invert_lower(T.bottomRightCorner(n2, n2));
  const Matrix tmp = T.bottomLeftCorner(n2, n1) * T.topLeftCorner(n1, n1).triangularView<Eigen::Lower>();
  T.bottomLeftCorner(n2, n1).noalias() =
      -(T.bottomRightCorner(n2, n2).triangularView<Eigen::Lower>() * tmp);
}

// Replaces the lower triangle of T with the lower triangle of T'T.
void lower_gram(Eigen::Ref<Matrix> T) {
  const Eigen::Index n = T.rows();
  if (n <= kBlock) {
    const Matrix L = T.triangularView<Eigen::Lower>();
    const Matrix M = L.transpose() * L;
    T.triangularView<Eigen::Lower>() = M;
    return;
  }
  const Eigen::Index n1 = n / 2, n2 = n - n1;
  lower_gram(T.topLeftCorner(n1, n1));
  T.topLeftCorner(n1, n1).selfadjointView<Eigen::Lower>().rankUpdate(
      T.bottomLeftCorner(n2, n1).transpose());
  const Matrix tmp = T.bottomRightCorner(n2, n2).triangularView<Eigen::Lower>().transpose() *
                     T.bottomLeftCorner(n2, n1);
  T.bottomLeftCorner(n2, n1) = tmp;
  lower_gram(T.bottomRightCorner(n2, n2));
}

}  // namespace

Matrix TrainedModel::inverse_covariance_lower() const {
  // C^-1 = L^-T L^-1
  Matrix work = chol_;
  invert_lower(work);
  lower_gram(work);
  return work;
}

Matrix TrainedModel::inverse_covariance() const {
  return inverse_covariance_lower().selfadjointView<Eigen::Lower>();
}

namespace {

double checked_variance(double v) {
  if (v < 0.0) {
    if (v > -kVarianceClamp) return 0.0;
    std::ostringstream os;
    os << "predictive variance " << v << " is negative beyond round-off";
    throw NumericalError(os.str());
  }
  return v;
}

}  // namespace

Prediction TrainedModel::predict(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != kernel_.input_dim()) {
    std::ostringstream os;
    os << "predict: input dimension " << x.size() << " does not match model dimension "
       << kernel_.input_dim();
    throw InvalidInput(os.str());
  }
  PointSet Z = x.transpose();
  return predict_many(Z).front();
}

std::vector<Prediction> TrainedModel::predict_many(const PointSet& Z) const {
  if (Z.cols() != kernel_.input_dim()) {
    std::ostringstream os;
    os << "predict: input dimension " << Z.cols() << " does not match model dimension "
       << kernel_.input_dim();
    throw InvalidInput(os.str());
  }
  std::vector<Prediction> out(static_cast<std::size_t>(Z.rows()));
  if (Z.rows() == 0) return out;
  const Matrix Kx = kernel_.cross(dataset_.X, Z);
  const Vector prior = kernel_.diagonal(Z);
  const Vector means = Kx.transpose() * alpha_;
  const Matrix V = chol_.triangularView<Eigen::Lower>().solve(Kx);
  const Vector explained = V.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    auto& p = out[static_cast<std::size_t>(i)];
    p.mean = means[i];
    p.variance = checked_variance(prior[i] + noise_variance_ - explained[i]);
  }
  return out;
}

double TrainedModel::log_marginal_likelihood() const {
  const double N = static_cast<double>(dataset_.size());
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  const double fit_term = dataset_.y.dot(alpha_);
  return -0.5 * log_det - 0.5 * fit_term - 0.5 * N * std::log(2.0 * std::numbers::pi);
}

Vector TrainedModel::lml_gradient(bool include_noise) const {
  // d lml / d theta_i = 1/2 tr((alpha alpha' - C^-1) dC/dtheta_i)
  // Only the lower triangle of W is formed.
  Matrix W = inverse_covariance_lower();
  W = -W;
  W.selfadjointView<Eigen::Lower>().rankUpdate(alpha_);
  const Vector kernel_part = 0.5 * kernel_.contract_gradient(dataset_.X, W);
  if (!include_noise) return kernel_part;
  Vector g(kernel_part.size() + 1);
  g.head(kernel_part.size()) = kernel_part;
  // dC / d log(noise) = noise * I
  g[kernel_part.size()] = 0.5 * noise_variance_ * W.trace();
  return g;
}

TrainedModel fit(const Dataset& dataset, const KernelConfig& kernel, double noise_variance) {
  return TrainedModel(dataset, kernel, noise_variance);
}

std::vector<Vector> sample_prior(const KernelConfig& kernel, const PointSet& X, int count,
                                 std::uint64_t seed) {
  require(count >= 1, "sample_prior: count must be >= 1");
  const auto factor = jittered_cholesky(kernel.gram(X));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Vector z(X.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    draws.emplace_back(factor.lower.triangularView<Eigen::Lower>() * z);
  }
  return draws;
}

}  // namespace qosgp

#include <cmath>
#include <optional>
#include <sstream>

#include "qosgp/errors.hpp"
#include "qosgp/gp.hpp"
#include "qosgp/rng.hpp"

namespace qosgp {

namespace {

struct Evaluated {
  TrainedModel model;
  double lml;
};

class Objective {
 public:
  Objective(const Dataset& dataset, const KernelConfig& kernel, double noise, bool learn_noise)
      : dataset_(dataset), kernel_(kernel), fixed_noise_(noise), learn_noise_(learn_noise) {}

  Vector pack(const KernelConfig& kernel, double noise) const {
    Vector theta(kernel.num_params() + (learn_noise_ ? 1 : 0));
    theta.head(kernel.num_params()) = kernel.log_params();
    if (learn_noise_) theta[kernel.num_params()] = std::log(noise);
    return theta;
  }

  KernelConfig kernel_at(const Vector& theta) const {
    return kernel_.with_log_params(theta.head(kernel_.num_params()));
  }

  double noise_at(const Vector& theta) const {
    return learn_noise_ ? std::exp(theta[kernel_.num_params()]) : fixed_noise_;
  }

  // Empty when theta cannot be decoded, factorized, or yields a non-finite LML.
  std::optional<Evaluated> evaluate(const Vector& theta) const {
    try {
      TrainedModel model(dataset_, kernel_at(theta), noise_at(theta));
      const double lml = model.log_marginal_likelihood();
      if (!std::isfinite(lml)) return std::nullopt;
      return Evaluated{std::move(model), lml};
    } catch (const InvalidInput&) {
      return std::nullopt;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  }

  Vector gradient(const TrainedModel& model) const { return model.lml_gradient(learn_noise_); }

 private:
  const Dataset& dataset_;
  const KernelConfig& kernel_;
  double fixed_noise_;
  bool learn_noise_;
};

struct StartResult {
  Vector theta;
  double lml;
  int iterations;
  std::vector<double> accepted;
};

std::string describe(const Vector& theta) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << theta[i];
  os << "]";
  return os.str();
}

StartResult ascend(const Objective& objective, Evaluated start, const Vector& theta0,
                   const OptimizerOptions& options) {
  StartResult result{theta0, start.lml, 0, {start.lml}};
  Evaluated current = std::move(start);
  double step = 0.0;

  for (int it = 0; it < options.max_iterations; ++it) {
    const Vector g = objective.gradient(current.model);
    if (!g.allFinite()) {
      throw NumericalError("non-finite LML gradient at log-parameters " + describe(result.theta));
    }
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax == 0.0) break;
    if (options.gradient_tolerance > 0.0 && gmax < options.gradient_tolerance) break;

    // Trial length starts at twice the last accepted step, capped so no
    // log-parameter moves by more than one unit.
    const double cap = 1.0 / gmax;
    double s = step > 0.0 ? std::min(2.0 * step, cap) : cap;
    const double slope = g.squaredNorm();
    std::optional<Evaluated> next;
    Vector trial;
    for (int b = 0; b < options.max_backtracks; ++b, s *= 0.5) {
      trial = result.theta + s * g;
      auto candidate = objective.evaluate(trial);
      if (candidate && candidate->lml >= current.lml + options.armijo * s * slope) {
        next = std::move(candidate);
        break;
      }
    }
    if (!next) break;

    const double improvement = next->lml - current.lml;
    const double relative = improvement / std::max(std::abs(current.lml), 1.0);
    step = s;
    result.theta = trial;
    result.lml = next->lml;
    result.accepted.push_back(next->lml);
    ++result.iterations;
    current = std::move(*next);
    if (relative < options.tolerance) break;
  }
  return result;
}

}  // namespace

OptimizationResult optimize_hyperparameters(const Dataset& dataset, const KernelConfig& kernel,
                                            double noise_variance,
                                            const OptimizerOptions& options) {
  require(options.max_iterations >= 0, "optimizer max_iterations must be >= 0");
  require(options.restarts >= 0, "optimizer restarts must be >= 0");
  require(options.tolerance >= 0.0, "optimizer tolerance must be >= 0");
  dataset.validate();

  Objective objective(dataset, kernel, noise_variance, options.learn_noise);
  const Vector theta0 = objective.pack(kernel, noise_variance);

  // Surfaces the precise validation failure for bad user input before the
  // generic non-finite check below.
  TrainedModel initial_model(dataset, kernel, noise_variance);
  const double initial_lml = initial_model.log_marginal_likelihood();
  if (!std::isfinite(initial_lml)) {
    throw NumericalError("non-finite log marginal likelihood at initial log-parameters " +
                         describe(theta0));
  }

  OptimizationResult out{kernel, noise_variance, initial_lml, initial_lml, 0, {initial_lml}};
  if (options.max_iterations == 0) return out;

  StartResult best =
      ascend(objective, Evaluated{std::move(initial_model), initial_lml}, theta0, options);

  Rng rng(options.seed);
  std::uniform_real_distribution<double> jitter(-options.perturbation, options.perturbation);
  for (int r = 0; r < options.restarts; ++r) {
    Vector theta = theta0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += jitter(rng);
    auto start = objective.evaluate(theta);
    if (!start) continue;
    StartResult candidate = ascend(objective, std::move(*start), theta, options);
    if (candidate.lml > best.lml) best = std::move(candidate);
  }

  out.kernel = objective.kernel_at(best.theta);
  out.noise_variance = objective.noise_at(best.theta);
  out.log_marginal_likelihood = best.lml;
  out.iterations = best.iterations;
  out.accepted = std::move(best.accepted);
  return out;
}

}  // namespace qosgp

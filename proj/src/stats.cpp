#include "qosgp/stats.hpp"

#include <cmath>
#include <limits>

#include "qosgp/errors.hpp"

namespace qosgp {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b); converges fast for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEpsilon) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete_beta: a and b must be > 0");
  require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  require(dof > 0.0, "student t: dof must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

double student_t_cdf(double t, double dof) {
  const double tail = 0.5 * student_t_two_sided_p(t, dof);
  return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult t_test_two_sample(std::span<const double> a, std::span<const double> b,
                              double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "t-test: alpha must lie in (0, 1)");
  TTestResult r;
  if (a.size() < 2 || b.size() < 2) return r;
  r.applicable = true;

  auto moments = [](std::span<const double> v, double& mean, double& ss) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
  };
  double mean_a, ss_a, mean_b, ss_b;
  moments(a, mean_a, ss_a);
  moments(b, mean_b, ss_b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  r.dof = na + nb - 2.0;
  const double pooled = (ss_a + ss_b) / r.dof;
  const double diff = mean_a - mean_b;

  if (pooled == 0.0) {
    if (diff == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = diff > 0.0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      r.degenerate = true;
    }
  } else {
    r.statistic = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    r.p_value = student_t_two_sided_p(r.statistic, r.dof);
  }
  r.reject = r.p_value < alpha;
  return r;
}

}  // namespace qosgp

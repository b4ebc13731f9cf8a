#pragma once

#include <span>

namespace qosgp {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1], by the
// modified Lentz continued fraction (absolute accuracy around 1e-14).
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

// P(|T| >= |t|) for T ~ Student-t(dof).
double student_t_two_sided_p(double t, double dof);

struct TTestResult {
  bool applicable = false;  // false when either sample has fewer than two values
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool reject = false;
  bool degenerate = false;  // zero pooled variance with unequal means
};

/// Two-sided two-sample t-test assuming equal variances (pooled estimate).
TTestResult t_test_two_sample(std::span<const double> a, std::span<const double> b,
                              double alpha = 0.05);

}  // namespace qosgp

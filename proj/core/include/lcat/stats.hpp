#pragma once

#include <span>

namespace lcat {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool significant = false;
};

/// Two-sided paired t-test on a - b with n - 1 degrees of freedom.
/// Zero variance: p = 0 (significant) for a nonzero mean difference, p = 1 otherwise.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

/// Regularized incomplete beta I_x(a, b), continued fraction to 1e-14.
double incomplete_beta(double x, double a, double b);

/// Student t CDF with `df` degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace lcat

#pragma once

namespace convocode::math {

/// Regularized lower incomplete gamma function P(a, x) = gamma(a, x) / Gamma(a).
/// a > 0, x >= 0.
double reg_lower_gamma(double a, double x);

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
double reg_upper_gamma(double a, double x);

/// Regularized incomplete beta function I_x(a, b). a, b > 0, x in [0, 1].
double reg_incomplete_beta(double a, double b, double x);

/// Upper tail of the chi-squared distribution: Pr[X >= x] with df degrees
/// of freedom, computed as Q(df/2, x/2).
double chi_squared_upper_tail(double x, int df);

/// Two-tailed p-value of Student's t distribution with df degrees of
/// freedom: Pr[|T| >= |t|] = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_tailed(double t, int df);

}  // namespace convocode::math

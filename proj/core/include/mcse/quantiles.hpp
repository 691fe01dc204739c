#pragma once

// CDFs and quantiles for the Student t, F, chi-square and normal laws.
//
// Quantiles are obtained by bracketed root finding on the CDF, which is in turn
// built on the regularized incomplete beta and gamma functions. This is slower
// than rational approximations but its accuracy is that of the CDF itself.
// Infinite degrees of freedom are accepted where the limit is a named law
// (t with df = inf is the standard normal; F with df2 = inf is chi2(df1)/df1).

namespace mcse {

/// I_x(a, b), the regularized incomplete beta function, for 0 <= x <= 1.
double regularized_incomplete_beta(double a, double b, double x);

/// P(a, x) and Q(a, x) = 1 - P(a, x), the regularized incomplete gamma functions.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double normal_cdf(double z);
double normal_quantile(double p);

double student_t_cdf(double t, double df);
/// q with CDF_t(q; df) = p. Requires 0 < p < 1 and df > 0 (df may be +inf).
double student_t_quantile(double p, double df);

double chi_squared_cdf(double x, double df);
double chi_squared_quantile(double p, double df);

double f_cdf(double q, double df1, double df2);
/// q with CDF_F(q; df1, df2) = p. Requires 0 < p < 1, df1 > 0, df2 > 0
/// (df2 may be +inf).
double f_quantile(double p, double df1, double df2);

}  // namespace mcse

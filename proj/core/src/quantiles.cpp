#include "mcse/quantiles.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "mcse/error.hpp"

namespace mcse {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxContinuedFraction = 200000;

// lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], valid for x >= 10.
double stirling_correction(double x) {
  const double x2 = x * x;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x;
}

// log B(a, b) without the cancellation lgamma sums suffer when a or b is large.
double log_beta(double a, double b) {
  if (a < b) std::swap(a, b);  // a >= b
  const double s = a + b;
  if (b >= 10.0) {
    return 0.5 * std::log(2.0 * std::numbers::pi) + (a - 0.5) * std::log1p(-b / s) +
           (b - 0.5) * std::log(b / s) - 0.5 * std::log(s) + stirling_correction(a) +
           stirling_correction(b) - stirling_correction(s);
  }
  if (a >= 10.0) {
    // lgamma(a) - lgamma(a + b) by Stirling, lgamma(b) directly.
    const double ratio = (a - 0.5) * std::log1p(-b / s) - b * std::log(s) + b +
                         stirling_correction(a) - stirling_correction(s);
    return std::lgamma(b) + ratio;
  }
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(s);
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxContinuedFraction; ++m) {
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
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

// I_x(a, b) with y = 1 - x supplied separately so neither loses precision.
double ibeta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_x = x < 0.5 ? std::log(x) : std::log1p(-y);
  const double log_y = y < 0.5 ? std::log(y) : std::log1p(-x);
  const double front = std::exp(a * log_x + b * log_y - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// 1 - I_x(a, b).
double ibeta_complement(double a, double b, double x, double y) { return ibeta(b, a, y, x); }

double gamma_log_front(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxContinuedFraction; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(gamma_log_front(a, x));
}

double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxContinuedFraction; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(gamma_log_front(a, x)) * h;
}

// Finds the root of a monotone f on [lo, hi) where f(lo) has the opposite sign
// of f(+large). The upper end is doubled until the sign changes.
template <class F>
double invert_on_half_line(F f, double lo, double hi_start) {
  const double f_lo = f(lo);
  if (f_lo == 0.0) return lo;
  double hi = hi_start;
  double f_hi = f(hi);
  while (std::signbit(f_hi) == std::signbit(f_lo) && f_hi != 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw Error("quantile bracket search diverged");
    f_hi = f(hi);
  }
  if (f_hi == 0.0) return hi;
  std::uintmax_t max_iter = 500;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f(lo), f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (a + b);
}

void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("probability must lie strictly between 0 and 1");
}

void require_dof(double df) {
  if (!(df > 0.0)) throw Error("degrees of freedom must be positive");
}

// P(T > t) for t >= 0.
double student_t_upper_tail(double t, double df) {
  if (std::isinf(df)) return 0.5 * std::erfc(t / std::numbers::sqrt2);
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return 0.5 * ibeta(0.5 * df, 0.5, x, y);
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete beta argument outside [0, 1]");
  return ibeta(a, b, x, 1.0 - x);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error("incomplete gamma shape must be positive");
  if (!(x >= 0.0)) throw Error("incomplete gamma argument must be non-negative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw Error("incomplete gamma shape must be positive");
  if (!(x >= 0.0)) throw Error("incomplete gamma argument must be non-negative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require_probability(p);
  if (p == 0.5) return 0.0;
  const double tail = p < 0.5 ? p : 1.0 - p;
  const double z = invert_on_half_line(
      [tail](double s) { return 0.5 * std::erfc(s / std::numbers::sqrt2) - tail; }, 0.0, 1.0);
  return p < 0.5 ? -z : z;
}

double student_t_cdf(double t, double df) {
  require_dof(df);
  if (std::isnan(t)) throw Error("t statistic is NaN");
  const double upper = student_t_upper_tail(std::abs(t), df);
  return t >= 0.0 ? 1.0 - upper : upper;
}

double student_t_quantile(double p, double df) {
  require_probability(p);
  require_dof(df);
  if (p == 0.5) return 0.0;
  if (std::isinf(df)) return normal_quantile(p);
  const double tail = p < 0.5 ? p : 1.0 - p;
  const double t = invert_on_half_line(
      [tail, df](double s) { return student_t_upper_tail(s, df) - tail; }, 0.0, 1.0);
  return p < 0.5 ? -t : t;
}

double chi_squared_cdf(double x, double df) {
  require_dof(df);
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi_squared_quantile(double p, double df) {
  require_probability(p);
  require_dof(df);
  const double a = 0.5 * df;
  if (p <= 0.5) {
    return invert_on_half_line(
        [a, p](double x) { return regularized_gamma_p(a, 0.5 * x) - p; }, 0.0, df);
  }
  const double q = 1.0 - p;
  return invert_on_half_line(
      [a, q](double x) { return q - regularized_gamma_q(a, 0.5 * x); }, 0.0, df);
}

double f_cdf(double q, double df1, double df2) {
  require_dof(df1);
  require_dof(df2);
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (std::isinf(df2)) return chi_squared_cdf(q * df1, df1);
  const double denom = df1 * q + df2;
  return ibeta(0.5 * df1, 0.5 * df2, df1 * q / denom, df2 / denom);
}

double f_quantile(double p, double df1, double df2) {
  require_probability(p);
  require_dof(df1);
  require_dof(df2);
  if (std::isinf(df2)) return chi_squared_quantile(p, df1) / df1;
  if (p == 0.5 && df1 == df2) return 1.0;
  const double a = 0.5 * df1;
  const double b = 0.5 * df2;
  if (p <= 0.5) {
    return invert_on_half_line(
        [=](double q) {
          const double denom = df1 * q + df2;
          return ibeta(a, b, df1 * q / denom, df2 / denom) - p;
        },
        0.0, 1.0);
  }
  const double upper = 1.0 - p;
  return invert_on_half_line(
      [=](double q) {
        const double denom = df1 * q + df2;
        return upper - ibeta_complement(a, b, df1 * q / denom, df2 / denom);
      },
      0.0, 1.0);
}

}  // namespace mcse

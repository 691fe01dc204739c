#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include "mcse/error.hpp"
#include "mcse/quantiles.hpp"
#include "mcse/random.hpp"

namespace {

using mcse::RngStream;

// Known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  EXPECT_EQ(mcse::philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}),
            (A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(mcse::philox4x32_10(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                A2{0xffffffffu, 0xffffffffu}),
            (A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(mcse::philox4x32_10(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                A2{0xa4093822u, 0x299f31d0u}),
            (A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, Reproducible) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a(), b());
    ASSERT_EQ(mcse::draw_normal(a, 1.0, 2.0), mcse::draw_normal(b, 1.0, 2.0));
    ASSERT_EQ(mcse::draw_inverse_gamma(a, {2.5, 3.0}), mcse::draw_inverse_gamma(b, {2.5, 3.0}));
    ASSERT_EQ(mcse::draw_log_uniform(a, 0.6, 6.0), mcse::draw_log_uniform(b, 0.6, 6.0));
  }
}

TEST(RngStream, StreamsDiffer) {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    same_ab += x == b();
    same_ac += x == c();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(RngStream, LagAndCrossCorrelationsSmall) {
  constexpr int n = 100000;
  RngStream s0(99, 0), s1(99, 1);
  std::vector<double> u0(n), u1(n);
  for (int i = 0; i < n; ++i) {
    u0[i] = s0.uniform() - 0.5;
    u1[i] = s1.uniform() - 0.5;
  }
  auto corr = [&](const std::vector<double>& a, const std::vector<double>& b, int lag) {
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i + lag < n; ++i) {
      sab += a[i] * b[i + lag];
      saa += a[i] * a[i];
      sbb += b[i + lag] * b[i + lag];
    }
    return sab / std::sqrt(saa * sbb);
  };
  EXPECT_LT(std::abs(corr(u0, u1, 0)), 0.01);
  EXPECT_LT(std::abs(corr(u0, u0, 1)), 0.01);
  EXPECT_LT(std::abs(corr(u1, u1, 1)), 0.01);
  EXPECT_LT(std::abs(corr(u0, u1, 1)), 0.01);
}

TEST(RngStream, UniformOpenStaysInside) {
  RngStream r(1, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(DrawNormal, ZeroVarianceReturnsMean) {
  RngStream r(1, 0);
  EXPECT_EQ(mcse::draw_normal(r, 5.0, 0.0), 5.0);
  EXPECT_THROW(mcse::draw_normal(r, 0.0, -1.0), mcse::Error);
}

TEST(DrawNormal, MomentsMatch) {
  constexpr int n = 1000000;
  RngStream r(2, 0);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += mcse::draw_normal(r, 1.0, 2.0);
  EXPECT_NEAR(s / n, 1.0, 4.0 * std::sqrt(2.0 / n));

  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = mcse::draw_normal(r, 0.0, 4.0);
    s1 += x;
    s2 += x * x;
  }
  const double var = (s2 - s1 * s1 / n) / (n - 1);
  EXPECT_NEAR(var, 4.0, 0.02 * 4.0);
}

TEST(DrawInverseGamma, MeanAndSupport) {
  constexpr int n = 1000000;
  RngStream r(3, 0);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = mcse::draw_inverse_gamma(r, {5.0, 8.0});
    ASSERT_GT(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s / n, 2.0, 0.02 * 2.0);
  EXPECT_THROW(mcse::draw_inverse_gamma(r, {0.0, 1.0}), mcse::Error);
  EXPECT_THROW(mcse::draw_inverse_gamma(r, {1.0, -1.0}), mcse::Error);
}

TEST(DrawInverseGamma, KolmogorovSmirnovAgainstQuadrature) {
  constexpr int n = 100000;
  const double alpha = 2.0, beta = 3.0;
  RngStream r(4, 0);
  std::vector<double> w(n);
  for (auto& x : w) x = mcse::draw_inverse_gamma(r, {alpha, beta});
  std::sort(w.begin(), w.end());

  const double log_norm = alpha * std::log(beta) - std::lgamma(alpha);
  auto density = [&](double x) {
    return x > 0.0 ? std::exp(log_norm - (alpha + 1.0) * std::log(x) - beta / x) : 0.0;
  };
  using boost::math::quadrature::gauss;
  double cdf = gauss<double, 30>::integrate(density, 0.0, w.front());
  double ks = std::max(std::abs(cdf - 0.0), std::abs(cdf - 1.0 / n));
  for (int i = 1; i < n; ++i) {
    cdf += gauss<double, 7>::integrate(density, w[i - 1], w[i]);
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n),
                   std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(DrawLogUniform, SupportMeanMedian) {
  constexpr int n = 1000000;
  RngStream r(5, 0);
  for (int i = 0; i < 10000; ++i) {
    const double x = mcse::draw_log_uniform(r, 0.6, 6.0);
    ASSERT_GT(x, 0.6);
    ASSERT_LT(x, 6.0);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += mcse::draw_log_uniform(r, 1.0, std::numbers::e);
  EXPECT_NEAR(s / n, std::numbers::e - 1.0, 0.01 * (std::numbers::e - 1.0));

  std::vector<double> v(100001);
  for (auto& x : v) x = mcse::draw_log_uniform(r, 0.5, 8.0);
  std::nth_element(v.begin(), v.begin() + 50000, v.end());
  // sd of the sample median on the log scale: (log 16) / sqrt(4 n) ~ 0.0044.
  EXPECT_NEAR(std::log(v[50000]), std::log(2.0), 0.02);
  EXPECT_THROW(mcse::draw_log_uniform(r, 2.0, 1.0), mcse::Error);
  EXPECT_THROW(mcse::draw_log_uniform(r, 0.0, 1.0), mcse::Error);
}

TEST(DrawMvn, IdentityGivesUncorrelatedNormals) {
  constexpr int n = 100000;
  RngStream r(6, 0);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd draws(n, 3);
  for (int i = 0; i < n; ++i) draws.row(i) = mcse::draw_mvn(r, mean, cov).transpose();
  const Eigen::MatrixXd centred = draws.rowwise() - draws.colwise().mean();
  const Eigen::MatrixXd c = centred.transpose() * centred / (n - 1);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(c(i, i), 1.0, 0.02);
    for (int j = 0; j < i; ++j) EXPECT_LT(std::abs(c(i, j) / std::sqrt(c(i, i) * c(j, j))), 0.01);
  }
}

TEST(DrawMvn, CorrelatedPair) {
  constexpr int n = 100000;
  RngStream r(7, 0);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.9, 0.9, 1.0;
  double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    const auto v = mcse::draw_mvn(r, Eigen::VectorXd::Zero(2), cov);
    sx += v[0];
    sy += v[1];
    sxy += v[0] * v[1];
    sxx += v[0] * v[0];
    syy += v[1] * v[1];
  }
  const double cxy = sxy - sx * sy / n, cxx = sxx - sx * sx / n, cyy = syy - sy * sy / n;
  EXPECT_NEAR(cxy / std::sqrt(cxx * cyy), 0.9, 0.01);
}

TEST(DrawMvn, RejectsIndefiniteCovariance) {
  RngStream r(8, 0);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  try {
    mcse::draw_mvn(r, Eigen::VectorXd::Zero(2), cov);
    FAIL() << "expected an error";
  } catch (const mcse::Error& e) {
    EXPECT_STREQ(e.what(), "covariance not positive definite");
  }
}

TEST(InverseGammaDensity, IntegratesToOne) {
  using boost::math::quadrature::gauss;
  auto f = [](double t) {
    // w = t / (1 - t) maps (0, 1) onto (0, inf).
    const double w = t / (1.0 - t);
    return std::exp(mcse::inverse_gamma_log_density(w, {2.0, 30.0})) / ((1.0 - t) * (1.0 - t));
  };
  using rule = gauss<double, 30>;
  EXPECT_NEAR(rule::integrate(f, 0.0, 0.5) + rule::integrate(f, 0.5, 0.999999), 1.0, 1e-4);
}

// ---------------------------------------------------------------------------
// Quantiles, with Boost.Math as the oracle.

TEST(StudentT, Examples) {
  EXPECT_DOUBLE_EQ(mcse::student_t_quantile(0.5, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(mcse::student_t_quantile(0.5, 1e6), 0.0);
  const double cauchy = std::tan(std::numbers::pi * 0.475);
  EXPECT_NEAR(mcse::student_t_quantile(0.975, 1.0), cauchy, 1e-10 * cauchy);
  EXPECT_NEAR(cauchy, 12.7062, 1e-4);
  EXPECT_NEAR(mcse::student_t_quantile(0.975, 1e6), 1.95996, 1e-4);
  EXPECT_NEAR(mcse::student_t_quantile(0.975, INFINITY),
              boost::math::quantile(boost::math::normal(), 0.975), 1e-12);
}

TEST(StudentT, MatchesBoost) {
  for (double df : {1.0, 2.0, 3.5, 10.0, 31.0, 250.0, 1e5}) {
    const boost::math::students_t dist(df);
    for (double p : {0.005, 0.025, 0.1, 0.5, 0.8, 0.975, 0.995}) {
      const double expected = boost::math::quantile(dist, p);
      EXPECT_NEAR(mcse::student_t_quantile(p, df), expected, 1e-10 * std::max(1.0, std::abs(expected)))
          << "df=" << df << " p=" << p;
      EXPECT_NEAR(mcse::student_t_cdf(expected, df), p, 1e-12);
    }
  }
}

TEST(StudentT, RejectsBadArguments) {
  EXPECT_THROW(mcse::student_t_quantile(0.0, 3.0), mcse::Error);
  EXPECT_THROW(mcse::student_t_quantile(1.0, 3.0), mcse::Error);
  EXPECT_THROW(mcse::student_t_quantile(0.5, 0.0), mcse::Error);
}

TEST(FisherF, MatchesBoost) {
  for (double df1 : {1.0, 3.0, 7.5}) {
    for (double df2 : {0.8, 2.0, 12.0, 400.0}) {
      const boost::math::fisher_f dist(df1, df2);
      for (double p : {0.005, 0.025, 0.5, 0.975, 0.995}) {
        const double expected = boost::math::quantile(dist, p);
        EXPECT_NEAR(mcse::f_quantile(p, df1, df2), expected, 1e-8 * expected)
            << df1 << "," << df2 << " p=" << p;
      }
    }
  }
}

TEST(FisherF, ReciprocalSymmetry) {
  for (double d : {1.0, 4.0, 17.0}) {
    for (double p : {0.01, 0.1, 0.3}) {
      EXPECT_NEAR(mcse::f_quantile(p, d, d) * mcse::f_quantile(1.0 - p, d, d), 1.0, 1e-8);
    }
    EXPECT_NEAR(mcse::f_quantile(0.5, d, d), 1.0, 1e-9);
  }
}

TEST(FisherF, OneNumeratorDofIsSquaredT) {
  for (double k : {1.0, 3.0, 30.0}) {
    const double t = mcse::student_t_quantile(0.9875, k);
    EXPECT_NEAR(mcse::f_quantile(0.975, 1.0, k), t * t, 1e-8 * t * t);
  }
}

TEST(FisherF, InfiniteDenominatorIsScaledChiSquare) {
  for (double df1 : {1.0, 3.0}) {
    const double chi = boost::math::quantile(boost::math::chi_squared(df1), 0.975);
    EXPECT_NEAR(mcse::f_quantile(0.975, df1, INFINITY), chi / df1, 1e-9);
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.9875);
  EXPECT_NEAR(mcse::f_quantile(0.975, 1.0, INFINITY), z * z, 1e-9);
}

TEST(Quantiles, CdfRoundTrip) {
  for (double p : {0.005, 0.025, 0.5, 0.975, 0.995}) {
    for (double df : {1.0, 5.0, 60.0}) {
      EXPECT_NEAR(mcse::student_t_cdf(mcse::student_t_quantile(p, df), df), p, 1e-8);
      EXPECT_NEAR(mcse::f_cdf(mcse::f_quantile(p, 3.0, df), 3.0, df), p, 1e-8);
    }
  }
}

TEST(Quantiles, ChiSquareAndNormal) {
  for (double df : {0.5, 1.0, 4.0, 100.0}) {
    const boost::math::chi_squared dist(df);
    for (double p : {0.01, 0.5, 0.99}) {
      const double expected = boost::math::quantile(dist, p);
      EXPECT_NEAR(mcse::chi_squared_quantile(p, df), expected, 1e-9 * expected);
    }
  }
  for (double p : {1e-6, 0.2, 0.5, 0.9}) {
    EXPECT_NEAR(mcse::normal_quantile(p), boost::math::quantile(boost::math::normal(), p), 1e-9);
  }
}

TEST(SpecialFunctions, IncompleteBetaAndGamma) {
  EXPECT_NEAR(mcse::regularized_incomplete_beta(2.5, 0.7, 0.3), boost::math::ibeta(2.5, 0.7, 0.3), 1e-13);
  EXPECT_NEAR(mcse::regularized_incomplete_beta(40.0, 60.0, 0.45), boost::math::ibeta(40.0, 60.0, 0.45),
              1e-12);
  EXPECT_NEAR(mcse::regularized_gamma_p(3.3, 2.0), boost::math::gamma_p(3.3, 2.0), 1e-13);
  EXPECT_NEAR(mcse::regularized_gamma_q(0.4, 7.0), boost::math::gamma_q(0.4, 7.0), 1e-13);
}

}  // namespace

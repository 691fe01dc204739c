#include "mcse/gelman_rubin.hpp"

#include <cmath>
#include <limits>

#include "mcse/error.hpp"
#include "mcse/quantiles.hpp"
#include "mcse/summation.hpp"

namespace mcse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
  return compensated_sum(v) / static_cast<double>(v.size());
}

// Sample covariance with an (m - 1) denominator.
double sample_covariance(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add((x[i] - mx) * (y[i] - my));
  return s.value() / static_cast<double>(x.size() - 1);
}

}  // namespace

BetweenWithin between_within(const MultiChainTrace& multi) {
  const std::size_t m = multi.chain_count();
  const std::size_t l = multi.chain_length();
  if (l < 2) throw Error("need at least two draws per chain");

  BetweenWithin out;
  out.chain_means.reserve(m);
  out.chain_variances.reserve(m);
  for (const auto& chain : multi.chains()) {
    const double mean = ergodic_average(chain);
    CompensatedSum ss;
    for (double y : chain.values()) ss.add((y - mean) * (y - mean));
    out.chain_means.push_back(mean);
    out.chain_variances.push_back(ss.value() / static_cast<double>(l - 1));
  }
  const double grand = mean_of(out.chain_means);
  CompensatedSum between;
  for (double mean : out.chain_means) between.add((mean - grand) * (mean - grand));
  out.between = static_cast<double>(l) / static_cast<double>(m - 1) * between.value();
  out.within = mean_of(out.chain_variances);
  if (!(out.within > 0.0)) throw DegenerateVarianceError();
  return out;
}

PsrfReport psrf(const MultiChainTrace& multi, const PsrfOptions& options) {
  const auto bw = between_within(multi);
  const double m = static_cast<double>(multi.chain_count());
  const double l = static_cast<double>(multi.chain_length());

  PsrfReport r;
  r.chains = multi.chain_count();
  r.length = multi.chain_length();
  r.between = bw.between;
  r.within = bw.within;
  r.upper_probability = options.upper_probability;
  r.v_hat = (l - 1.0) / l * bw.within + (m + 1.0) * bw.between / (m * l);

  CompensatedSum dev;
  for (double s2 : bw.chain_variances) dev.add((s2 - bw.within) * (s2 - bw.within));
  r.sigma2_within = dev.value() / (m - 1.0);

  std::vector<double> squared_means(bw.chain_means.size());
  for (std::size_t j = 0; j < squared_means.size(); ++j) {
    squared_means[j] = bw.chain_means[j] * bw.chain_means[j];
  }
  const double grand = mean_of(bw.chain_means);
  const double cov_term = sample_covariance(bw.chain_variances, squared_means) -
                          2.0 * grand * sample_covariance(bw.chain_variances, bw.chain_means);

  const double fixed = (l - 1.0) / l;
  const double random = (m + 1.0) / (m * l);
  r.var_v_hat = fixed * fixed / m * r.sigma2_within +
                random * random * 2.0 / (m - 1.0) * bw.between * bw.between +
                2.0 * (m + 1.0) * (l - 1.0) / (m * l * l) * (l / m) * cov_term;
  if (r.var_v_hat < 0.0) r.var_v_hat = 0.0;  // rounding in the covariance term

  if (r.var_v_hat > 0.0) {
    r.dof = options.pooled_dof == PooledDofForm::moment_matched
                ? 2.0 * r.v_hat * r.v_hat / r.var_v_hat
                : 2.0 * r.v_hat / r.var_v_hat;
  } else {
    r.dof = kInf;
  }
  const double correction = std::isinf(r.dof) ? 1.0 : (r.dof + 3.0) / (r.dof + 1.0);
  r.r_hat = std::sqrt(correction * r.v_hat / bw.within);

  if (r.sigma2_within > 0.0) {
    const double scale = options.within_dof == WithinDofForm::coda ? m : 1.0;
    r.within_dof = scale * 2.0 * bw.within * bw.within / r.sigma2_within;
  } else {
    r.within_dof = kInf;
  }
  r.r_upper = psrf_upper(r);
  return r;
}

double psrf_upper(const PsrfReport& report) {
  const double m = static_cast<double>(report.chains);
  const double l = static_cast<double>(report.length);
  const double correction = std::isinf(report.dof) ? 1.0 : (report.dof + 3.0) / (report.dof + 1.0);
  const double ratio = report.between / report.within;
  double f_term = 0.0;
  if (ratio > 0.0) {
    const double w = report.sigma2_within > 0.0 ? report.within_dof : kInf;
    f_term = f_quantile(report.upper_probability, m - 1.0, w) * (m + 1.0) / (m * l) * ratio;
  }
  return std::sqrt(correction * ((l - 1.0) / l + f_term));
}

}  // namespace mcse

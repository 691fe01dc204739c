#include "mcse/batch_means.hpp"

#include <cmath>

#include "mcse/error.hpp"
#include "mcse/quantiles.hpp"
#include "mcse/summation.hpp"

namespace mcse {

namespace {

void require_options(const CbmOptions& options) {
  if (!(options.theta > 0.0 && options.theta < 1.0)) throw Error("theta must lie in (0, 1)");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error("confidence must lie in (0, 1)");
  }
}

double upper_probability(double confidence) { return 1.0 - (1.0 - confidence) / 2.0; }

// b/(a-1) * sum_j (Ybar_j - mean(Ybar))^2 for the given batch means.
double batch_variance(std::span<const double> batch_means, std::size_t batch_size) {
  const double centre = compensated_sum(batch_means) / static_cast<double>(batch_means.size());
  CompensatedSum ss;
  for (double y : batch_means) {
    const double d = y - centre;
    ss.add(d * d);
  }
  return static_cast<double>(batch_size) / static_cast<double>(batch_means.size() - 1) *
         ss.value();
}

}  // namespace

BatchLayout batch_layout(std::size_t n, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error("theta must lie in (0, 1)");
  if (n < 4) throw Error("insufficient draws for batching");
  const double nd = static_cast<double>(n);
  auto b = static_cast<std::size_t>(std::floor(std::pow(nd, theta)));
  // pow can land a hair below an exact integer power; nudge b to the true floor.
  while (b > 1 && std::pow(static_cast<double>(b), 1.0 / theta) > nd * (1.0 + 1e-12)) --b;
  while (std::pow(static_cast<double>(b + 1), 1.0 / theta) <= nd * (1.0 + 1e-12)) ++b;
  if (theta == 0.5) {
    // Exact integer check for the common square-root layout.
    while (b * b > n) --b;
    while ((b + 1) * (b + 1) <= n) ++b;
  }
  if (b == 0) b = 1;
  const std::size_t a = n / b;
  if (a < 2) throw Error("insufficient draws for batching");
  return {a, b};
}

CbmEstimate cbm_variance(std::span<const double> draws, const CbmOptions& options) {
  require_options(options);
  const auto layout = batch_layout(draws.size(), options.theta);
  const std::size_t a = layout.batches;
  const std::size_t b = layout.batch_size;

  std::vector<double> means(a);
  for (std::size_t j = 0; j < a; ++j) {
    CompensatedSum s;
    for (std::size_t i = j * b; i < (j + 1) * b; ++i) {
      if (!std::isfinite(draws[i])) throw Error("trace contains a non-finite draw");
      s.add(draws[i]);
    }
    means[j] = s.value() / static_cast<double>(b);
  }
  for (std::size_t i = a * b; i < draws.size(); ++i) {
    if (!std::isfinite(draws[i])) throw Error("trace contains a non-finite draw");
  }

  CbmEstimate est;
  est.n = draws.size();
  est.batches = a;
  est.batch_size = b;
  est.confidence = options.confidence;
  est.sigma2 = batch_variance(means, b);
  est.point = ergodic_average(draws);
  est.mcse = std::sqrt(est.sigma2 / static_cast<double>(est.n));
  est.half_width = half_width(est);
  return est;
}

CbmEstimate cbm_variance(const ScalarTrace& trace, const CbmOptions& options) {
  return cbm_variance(trace.values(), options);
}

double half_width(const CbmEstimate& estimate) {
  if (estimate.batches < 2) throw Error("half-width needs at least two batches");
  if (estimate.sigma2 == 0.0) return 0.0;
  const double t = student_t_quantile(upper_probability(estimate.confidence),
                                      static_cast<double>(estimate.batches - 1));
  return t * std::sqrt(estimate.sigma2 / static_cast<double>(estimate.n));
}

int significant_figures(double point, double half_width) {
  if (!std::isfinite(point)) throw Error("point estimate must be finite");
  if (!(half_width >= 0.0)) throw Error("half-width must be non-negative");
  if (half_width == 0.0) return kMaxSignificantFigures;
  if (point == 0.0) return 0;

  const double magnitude = std::abs(point);
  int exponent = static_cast<int>(std::floor(std::log10(magnitude)));
  if (std::pow(10.0, exponent) > magnitude) --exponent;
  if (std::pow(10.0, exponent + 1) <= magnitude) ++exponent;

  const double lo = point - half_width;
  const double hi = point + half_width;
  int figures = 0;
  for (int k = 1; k <= kMaxSignificantFigures; ++k) {
    const double unit = std::pow(10.0, exponent - k + 1);
    const double rounded = std::round(point / unit) * unit;
    if (!(lo >= rounded - unit / 2 && hi <= rounded + unit / 2)) break;
    figures = k;
  }
  return figures;
}

CbmTracker::CbmTracker(CbmOptions options) : options_(options) { require_options(options_); }

void CbmTracker::push(double value) {
  if (!std::isfinite(value)) throw Error("trace contains a non-finite draw");
  // Neumaier step on the running (high, low) pair.
  const double t = running_high_ + value;
  if (std::abs(running_high_) >= std::abs(value)) {
    running_low_ += (running_high_ - t) + value;
  } else {
    running_low_ += (value - t) + running_high_;
  }
  running_high_ = t;
  prefix_high_.push_back(running_high_);
  prefix_low_.push_back(running_low_);
  ++count_;
}

double CbmTracker::range_sum(std::size_t begin, std::size_t end) const {
  return (prefix_high_[end] - prefix_high_[begin]) + (prefix_low_[end] - prefix_low_[begin]);
}

double CbmTracker::mean() const {
  if (count_ == 0) throw Error("empty trace");
  return range_sum(0, count_) / static_cast<double>(count_);
}

double CbmTracker::t_quantile(std::size_t dof) const {
  if (dof != cached_dof_) {
    cached_quantile_ =
        student_t_quantile(upper_probability(options_.confidence), static_cast<double>(dof));
    cached_dof_ = dof;
  }
  return cached_quantile_;
}

CbmEstimate CbmTracker::estimate() const {
  const auto layout = batch_layout(count_, options_.theta);
  const std::size_t a = layout.batches;
  const std::size_t b = layout.batch_size;
  std::vector<double> means(a);
  for (std::size_t j = 0; j < a; ++j) {
    means[j] = range_sum(j * b, (j + 1) * b) / static_cast<double>(b);
  }
  CbmEstimate est;
  est.n = count_;
  est.batches = a;
  est.batch_size = b;
  est.confidence = options_.confidence;
  est.sigma2 = batch_variance(means, b);
  est.point = mean();
  est.mcse = std::sqrt(est.sigma2 / static_cast<double>(count_));
  est.half_width = est.sigma2 == 0.0 ? 0.0 : t_quantile(a - 1) * est.mcse;
  return est;
}

}  // namespace mcse

#pragma once

// Consistent batch means (CBM): nonoverlapping batch means whose batch size
// b = floor(n^theta) grows with the run length, so that the estimate of the
// CLT variance sigma^2_g is strongly consistent.

#include <cstddef>
#include <span>
#include <vector>

#include "mcse/traces.hpp"

namespace mcse {

struct CbmOptions {
  double theta = 0.5;        // batch size exponent, 0 < theta < 1
  double confidence = 0.95;  // two-sided interval level
};

struct BatchLayout {
  std::size_t batches = 0;     // a
  std::size_t batch_size = 0;  // b
};

/// b = floor(n^theta) (exact at perfect powers), a = floor(n / b).
/// Throws mcse::Error("insufficient draws for batching") unless a >= 2.
BatchLayout batch_layout(std::size_t n, double theta);

struct CbmEstimate {
  std::size_t n = 0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
  double sigma2 = 0.0;      // batch means estimate of sigma^2_g
  double point = 0.0;       // mean of all n draws
  double mcse = 0.0;        // sqrt(sigma2 / n)
  double half_width = 0.0;  // t_{a-1} * mcse
  double confidence = 0.95;

  std::size_t dof() const noexcept { return batches - 1; }
};

/// Batch means use the first a*b draws, centred on the mean of those draws;
/// the point estimate and sqrt(n) use all n draws.
CbmEstimate cbm_variance(std::span<const double> draws, const CbmOptions& options = {});
CbmEstimate cbm_variance(const ScalarTrace& trace, const CbmOptions& options = {});

/// t_{1-(1-confidence)/2, a-1} * sqrt(sigma2 / n).
double half_width(const CbmEstimate& estimate);

/// Largest number of significant figures k such that point +/- half_width
/// fits inside the rounding bracket of point at k figures, counting up from
/// k = 1 and stopping at the first failure. Capped at kMaxSignificantFigures.
/// A zero point yields 0 unless half_width is also 0.
int significant_figures(double point, double half_width);

inline constexpr int kMaxSignificantFigures = 15;

/// Incremental CBM for a growing trace. Keeps compensated prefix sums so that
/// an estimate costs O(a) rather than O(n), which matters when a stopping
/// rule is checked every few iterations.
class CbmTracker {
 public:
  explicit CbmTracker(CbmOptions options = {});

  void push(double value);
  std::size_t size() const noexcept { return count_; }
  double mean() const;

  /// Same contract as cbm_variance on the draws pushed so far.
  CbmEstimate estimate() const;

 private:
  double range_sum(std::size_t begin, std::size_t end) const;
  double t_quantile(std::size_t dof) const;

  CbmOptions options_;
  std::size_t count_ = 0;
  std::vector<double> prefix_high_{0.0};
  std::vector<double> prefix_low_{0.0};
  double running_high_ = 0.0;
  double running_low_ = 0.0;
  mutable std::size_t cached_dof_ = 0;
  mutable double cached_quantile_ = 0.0;
};

}  // namespace mcse

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace mcse {

/// Neumaier's variant of Kahan compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + compensation_; }
  double high() const noexcept { return sum_; }
  double low() const noexcept { return compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value();
}

}  // namespace mcse

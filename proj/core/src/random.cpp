#include "mcse/random.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "mcse/error.hpp"

namespace mcse {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {}

void RngStream::refill() noexcept {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32_10(counter, key);
  ++block_;
  cursor_ = 0;
}

RngStream::result_type RngStream::operator()() noexcept {
  if (cursor_ >= 4) refill();
  const std::uint64_t word = static_cast<std::uint64_t>(buffer_[cursor_]) |
                             (static_cast<std::uint64_t>(buffer_[cursor_ + 1]) << 32);
  cursor_ += 2;
  return word;
}

double RngStream::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() { return normal_(*this); }

double RngStream::standard_gamma(double shape) {
  using param_type = std::gamma_distribution<double>::param_type;
  return gamma_(*this, param_type(shape, 1.0));
}

double draw_normal(RngStream& rng, double mean, double variance) {
  if (!(variance >= 0.0)) throw Error("normal variance must be non-negative");
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * rng.standard_normal();
}

double draw_inverse_gamma(RngStream& rng, InverseGammaParams params) {
  if (!(params.shape > 0.0) || !(params.scale > 0.0)) {
    throw Error("inverse gamma parameters must be positive");
  }
  double g = 0.0;
  // A gamma draw can underflow to zero for tiny shapes; redraw rather than return inf.
  do {
    g = rng.standard_gamma(params.shape);
  } while (g == 0.0);
  return params.scale / g;
}

double draw_log_uniform(RngStream& rng, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw Error("log-uniform bounds must satisfy 0 < lo < hi");
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  double x = 0.0;
  do {
    x = std::exp(log_lo + (log_hi - log_lo) * rng.uniform_open());
  } while (!(x > lo && x < hi));
  return x;
}

Eigen::VectorXd draw_mvn(RngStream& rng, const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw Error("covariance dimension does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error("covariance not positive definite");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.standard_normal();
  return mean + llt.matrixL() * z;
}

double inverse_gamma_log_density(double w, InverseGammaParams params) {
  if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
  return params.shape * std::log(params.scale) - std::lgamma(params.shape) -
         (params.shape + 1.0) * std::log(w) - params.scale / w;
}

}  // namespace mcse

#pragma once

// Reproducible random streams and the variate generators used by the samplers.
//
// RngStream is a Philox4x32-10 counter-based generator. The 128-bit counter is
// split into a 64-bit stream id (high half) and a 64-bit block index (low
// half), and the 64-bit seed is the Philox key. Two streams with the same seed
// and different ids therefore walk disjoint regions of one counter space, so
// stream separation holds by construction rather than by seeding luck.

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Core>

namespace mcse {

/// The Philox4x32 block function with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept;
  double standard_normal();
  /// Gamma variate with the given shape and unit rate.
  double standard_gamma(double shape);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int cursor_ = 4;  // in 64-bit words consumed from buffer_ (0, 2 or 4)
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::gamma_distribution<double> gamma_{1.0, 1.0};
};

/// Stream assignment for replicated studies: replication r, chain c.
constexpr std::uint64_t replication_stream_id(std::uint64_t replication, std::uint64_t chain,
                                              std::uint64_t max_chains) noexcept {
  return replication * max_chains + chain;
}

/// Streams at or above this id are reserved for study-level draws (start sets,
/// synthetic data, pilot runs) so they never collide with replication streams.
inline constexpr std::uint64_t kReservedStreamBase = std::uint64_t{1} << 40;

/// IG(shape, scale): density proportional to w^-(shape+1) exp(-scale / w), w > 0.
struct InverseGammaParams {
  double shape;
  double scale;
};

/// One N(mean, variance) variate; variance 0 returns mean exactly.
double draw_normal(RngStream& rng, double mean, double variance);

/// scale / Gamma(shape, rate 1).
double draw_inverse_gamma(RngStream& rng, InverseGammaParams params);

/// exp(U) with U uniform on (log lo, log hi).
double draw_log_uniform(RngStream& rng, double lo, double hi);

/// mean + L z with L the lower Cholesky factor of covariance.
/// Throws mcse::Error("covariance not positive definite") if factorization fails.
Eigen::VectorXd draw_mvn(RngStream& rng, const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& covariance);

/// Log density of IG(shape, scale) at w, including the normalising constant.
double inverse_gamma_log_density(double w, InverseGammaParams params);

}  // namespace mcse

#pragma once

// Hierarchical geostatistical model
//
//   Z(s) | beta, xi(s)   = X(s) beta + xi(s),          s in D
//   xi | tau2, sigma2, phi ~ N(0, tau2 I + sigma2 H(phi)),  H_ij = exp(-|s_i - s_j| / phi)
//   tau2 ~ IG(2, 30),  sigma2 ~ IG(0.1, 30),  phi ~ LogUniform(0.6, 6),  pi(beta) = 1
//
// and its Metropolis-within-Gibbs sampler: a joint random-walk proposal on
// (tau2, phi, beta) followed by a univariate update of sigma2 that leaves its
// full conditional invariant.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mcse/random.hpp"

namespace mcse {

struct Site {
  double x = 0.0;
  double y = 0.0;  // latitude; also the covariate X(s)
};

struct GeoRegion {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

struct GeoData {
  std::vector<Site> sites;
  Eigen::VectorXd covariate;  // X(s)
  Eigen::VectorXd response;   // Z(s)

  std::size_t size() const noexcept { return sites.size(); }
  /// N >= 3, distinct sites, matching vector lengths, finite values.
  void validate() const;
};

struct GeoState {
  double tau2 = 1.0;
  double sigma2 = 1.0;
  double phi = 1.0;
  double beta = 0.0;

  friend bool operator==(const GeoState&, const GeoState&) = default;
};

/// Parameter names in the order used by traces and reports.
inline const std::vector<std::string>& geo_parameter_names() {
  static const std::vector<std::string> names = {"tau2", "sigma2", "phi", "beta"};
  return names;
}
std::vector<double> to_vector(const GeoState& state);
GeoState geo_state_from(std::span<const double> values);

namespace geo_prior {
inline constexpr InverseGammaParams tau2{2.0, 30.0};
inline constexpr InverseGammaParams sigma2{0.1, 30.0};
inline constexpr double phi_lower = 0.6;
inline constexpr double phi_upper = 6.0;
}  // namespace geo_prior

bool geo_in_support(const GeoState& state) noexcept;

Eigen::MatrixXd geo_distances(std::span<const Site> sites);
/// Exponential correlation exp(-distance / phi); symmetric with unit diagonal.
Eigen::MatrixXd geo_correlation(std::span<const Site> sites, double phi);

/// Log prior kernel: IG(2,30) at tau2 + IG(0.1,30) at sigma2 (both
/// normalised) + log-uniform density at phi; -inf outside the support.
double geo_log_prior(const GeoState& state);

/// log N(Z; X beta, tau2 I + sigma2 H(phi)) via a Cholesky factorisation.
/// Returns -inf (with a warning) if the covariance is not positive definite.
double geo_log_likelihood(const GeoState& state, const GeoData& data);

/// geo_log_likelihood + geo_log_prior; -inf outside the support.
double geo_log_posterior(const GeoState& state, const GeoData& data);

enum class Sigma2Update {
  slice,            // stepping-out slice sampler on log sigma2
  random_walk_log,  // Gaussian random-walk Metropolis on log sigma2
};

struct GeoSamplerOptions {
  double proposal_variance = 0.3;  // per component of (tau2, phi, beta)
  Sigma2Update sigma2_update = Sigma2Update::slice;
  double slice_width = 1.0;   // initial bracket width on the log sigma2 scale
  int slice_max_steps = 32;   // stepping-out budget
  double log_sigma2_step_sd = 0.5;
};

struct GeoStepInfo {
  bool joint_accepted = false;
};

/// Stateful sampler; caches pairwise distances, the current log posterior and
/// the eigendecomposition of H(phi) used by the sigma2 update.
class GeoSampler {
 public:
  GeoSampler(const GeoData& data, const GeoState& start, GeoSamplerOptions options = {});

  /// Joint (tau2, phi, beta) proposal then the sigma2 update.
  GeoStepInfo step(RngStream& rng);

  /// Metropolis accept/reject of a given joint proposal (sigma2 is taken from
  /// the current state). Returns whether it was accepted.
  bool accept_joint(GeoState proposal, RngStream& rng);

  void update_sigma2(RngStream& rng);

  /// Log density of sigma2's full conditional (up to a constant) at the
  /// current tau2, phi and beta, evaluated in the eigenbasis of H(phi):
  ///   -1/2 sum log(tau2 + sigma2 l_i) - 1/2 sum r_i^2 / (tau2 + sigma2 l_i) + log IG(sigma2).
  double sigma2_conditional_log_density(double sigma2);

  const GeoState& state() const noexcept { return state_; }
  double log_posterior() const noexcept { return log_posterior_; }

 private:
  double log_posterior_at(const GeoState& state, Eigen::MatrixXd& correlation) const;
  void refresh_eigenbasis();
  double sigma2_kernel(double sigma2) const;  // requires a fresh eigenbasis

  const GeoData* data_;
  GeoSamplerOptions options_;
  Eigen::MatrixXd distances_;
  GeoState state_;
  double log_posterior_;
  Eigen::MatrixXd correlation_;           // H(phi) at the current phi
  Eigen::MatrixXd proposal_correlation_;  // H(phi) at the last proposed phi

  double basis_phi_ = -1.0;
  Eigen::VectorXd basis_values_;
  Eigen::VectorXd projected_response_;
  Eigen::VectorXd projected_covariate_;
  Eigen::VectorXd rotated_residual_;
};

struct GeoStepResult {
  GeoState state;
  bool accepted = false;
};

/// One sampler iteration from `state` (builds a throwaway GeoSampler).
GeoStepResult geo_mh_step(const GeoState& state, const GeoData& data, RngStream& rng,
                          const GeoSamplerOptions& options = {});

/// N sites uniform in `region`, X = latitude, Z ~ N(X beta, tau2 I + sigma2 H(phi)).
GeoData synth_geo_data(RngStream& rng, std::size_t n_sites, const GeoState& truth,
                       const GeoRegion& region);

// Dataset CSV: header "x,y,X,Z", one row per site.
void write_geo_data_csv(std::ostream& out, const GeoData& data);
GeoData read_geo_data_csv(std::istream& in);
GeoData read_geo_data_csv(const std::filesystem::path& path);

}  // namespace mcse

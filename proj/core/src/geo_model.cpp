#include "mcse/geo_model.hpp"

#include <cmath>
#include <initializer_list>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "mcse/error.hpp"
#include "mcse/log.hpp"
#include "mcse/traces.hpp"

namespace mcse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void fill_correlation(const Eigen::MatrixXd& distances, double phi, Eigen::MatrixXd& h) {
  const Eigen::Index n = distances.rows();
  h.resize(n, n);
  const double inv_phi = 1.0 / phi;
  for (Eigen::Index j = 0; j < n; ++j) {
    h(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      h(i, j) = std::exp(-distances(i, j) * inv_phi);
      h(j, i) = h(i, j);
    }
  }
}

Eigen::MatrixXd covariance_from(const Eigen::MatrixXd& correlation, const GeoState& s) {
  Eigen::MatrixXd sigma = s.sigma2 * correlation;
  sigma.diagonal().array() += s.tau2;
  return sigma;
}

double gaussian_log_density(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& residual) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    log_warning("geostatistical covariance is not positive definite; treating as rejected");
    return kNegInf;
  }
  const Eigen::VectorXd white = llt.matrixL().solve(residual);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(residual.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());
}

// sqrt(a^2 + b^2) without overflow; cheaper than std::hypot.
double pythag(double a, double b) {
  a = std::abs(a);
  b = std::abs(b);
  if (a > b) return a * std::sqrt(1.0 + (b / a) * (b / a));
  return b == 0.0 ? 0.0 : b * std::sqrt(1.0 + (a / b) * (a / b));
}

// Implicit QL iterations on a symmetric tridiagonal matrix (diagonal d,
// subdiagonal e with e[i] coupling i and i + 1). On return d holds the
// eigenvalues and each vector in `projected` has been replaced by its
// coordinates in the eigenbasis. The rotations are applied to those vectors
// directly, so the eigenvector matrix is never formed.
void tridiagonal_ql(Eigen::VectorXd& d, Eigen::VectorXd e,
                    std::initializer_list<Eigen::VectorXd*> projected) {
  const Eigen::Index n = d.size();
  e.conservativeResize(n);
  e[n - 1] = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    int iterations = 0;
    Eigen::Index m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m == l) break;
      if (++iterations > 60) throw Error("tridiagonal eigenvalue iteration did not converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = pythag(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      Eigen::Index i = m - 1;
      bool deflated = false;
      for (; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = pythag(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (auto* w : projected) {
          const double upper = (*w)[i + 1];
          (*w)[i + 1] = s * (*w)[i] + c * upper;
          (*w)[i] = c * (*w)[i] - s * upper;
        }
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
}

}  // namespace

void GeoData::validate() const {
  const auto n = static_cast<Eigen::Index>(sites.size());
  if (sites.size() < 3) throw Error("geostatistical data needs at least three sites");
  if (covariate.size() != n || response.size() != n) {
    throw Error("covariate and response must have one entry per site");
  }
  if (!covariate.allFinite() || !response.allFinite()) throw Error("data must be finite");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      if (sites[i].x == sites[j].x && sites[i].y == sites[j].y) {
        throw Error("geostatistical sites must be distinct");
      }
    }
  }
}

std::vector<double> to_vector(const GeoState& s) { return {s.tau2, s.sigma2, s.phi, s.beta}; }

GeoState geo_state_from(std::span<const double> v) {
  if (v.size() != 4) throw Error("a geostatistical state has four parameters");
  return {v[0], v[1], v[2], v[3]};
}

bool geo_in_support(const GeoState& s) noexcept {
  return s.tau2 > 0.0 && s.sigma2 > 0.0 && s.phi > geo_prior::phi_lower &&
         s.phi < geo_prior::phi_upper && std::isfinite(s.beta) && std::isfinite(s.tau2) &&
         std::isfinite(s.sigma2);
}

Eigen::MatrixXd geo_distances(std::span<const Site> sites) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = std::hypot(sites[i].x - sites[j].x, sites[i].y - sites[j].y);
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

Eigen::MatrixXd geo_correlation(std::span<const Site> sites, double phi) {
  if (!(phi > 0.0)) throw Error("range parameter phi must be positive");
  Eigen::MatrixXd h;
  fill_correlation(geo_distances(sites), phi, h);
  return h;
}

double geo_log_prior(const GeoState& s) {
  if (!geo_in_support(s)) return kNegInf;
  const double log_phi_density =
      -std::log(s.phi) - std::log(std::log(geo_prior::phi_upper / geo_prior::phi_lower));
  return inverse_gamma_log_density(s.tau2, geo_prior::tau2) +
         inverse_gamma_log_density(s.sigma2, geo_prior::sigma2) + log_phi_density;
}

double geo_log_likelihood(const GeoState& s, const GeoData& data) {
  if (!geo_in_support(s)) return kNegInf;
  const Eigen::VectorXd residual = data.response - s.beta * data.covariate;
  Eigen::MatrixXd h;
  fill_correlation(geo_distances(data.sites), s.phi, h);
  return gaussian_log_density(covariance_from(h, s), residual);
}

double geo_log_posterior(const GeoState& s, const GeoData& data) {
  const double prior = geo_log_prior(s);
  if (prior == kNegInf) return kNegInf;
  return geo_log_likelihood(s, data) + prior;
}

GeoSampler::GeoSampler(const GeoData& data, const GeoState& start, GeoSamplerOptions options)
    : data_(&data),
      options_(options),
      distances_(geo_distances(data.sites)),
      state_(start),
      log_posterior_(0.0) {
  data.validate();
  if (!geo_in_support(start)) throw Error("sampler start lies outside the prior support");
  log_posterior_ = log_posterior_at(start, correlation_);
  if (!std::isfinite(log_posterior_)) throw Error("sampler start has zero posterior density");
}

double GeoSampler::log_posterior_at(const GeoState& s, Eigen::MatrixXd& correlation) const {
  const double prior = geo_log_prior(s);
  if (prior == kNegInf) return kNegInf;
  fill_correlation(distances_, s.phi, correlation);
  const Eigen::VectorXd residual = data_->response - s.beta * data_->covariate;
  return gaussian_log_density(covariance_from(correlation, s), residual) + prior;
}

bool GeoSampler::accept_joint(GeoState proposal, RngStream& rng) {
  proposal.sigma2 = state_.sigma2;
  const double proposed = log_posterior_at(proposal, proposal_correlation_);
  if (proposed == kNegInf) return false;
  const double log_ratio = proposed - log_posterior_;
  if (std::log(rng.uniform_open()) < log_ratio) {
    state_ = proposal;
    correlation_.swap(proposal_correlation_);
    log_posterior_ = proposed;
    return true;
  }
  return false;
}

void GeoSampler::refresh_eigenbasis() {
  if (basis_phi_ != state_.phi) {
    // correlation_ always holds H at the current phi.
    Eigen::Tridiagonalization<Eigen::MatrixXd> tri(correlation_);
    projected_response_ = tri.matrixQ().adjoint() * data_->response;
    projected_covariate_ = tri.matrixQ().adjoint() * data_->covariate;
    basis_values_ = tri.diagonal();
    tridiagonal_ql(basis_values_, tri.subDiagonal(), {&projected_response_, &projected_covariate_});
    basis_values_ = basis_values_.cwiseMax(0.0);
    basis_phi_ = state_.phi;
  }
  rotated_residual_ = projected_response_ - state_.beta * projected_covariate_;
}

double GeoSampler::sigma2_conditional_log_density(double sigma2) {
  refresh_eigenbasis();
  return sigma2_kernel(sigma2);
}

double GeoSampler::sigma2_kernel(double sigma2) const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return kNegInf;
  const Eigen::ArrayXd variances = state_.tau2 + sigma2 * basis_values_.array();
  const double log_lik =
      -0.5 * (variances.log().sum() + (rotated_residual_.array().square() / variances).sum());
  return log_lik + inverse_gamma_log_density(sigma2, geo_prior::sigma2);
}

void GeoSampler::update_sigma2(RngStream& rng) {
  refresh_eigenbasis();
  // Work on eta = log sigma2; the Jacobian adds eta to the log density.
  auto log_target = [this](double eta) { return sigma2_kernel(std::exp(eta)) + eta; };
  const double eta0 = std::log(state_.sigma2);
  const double g0 = log_target(eta0);
  double eta_new = eta0;
  double g_new = g0;

  if (options_.sigma2_update == Sigma2Update::random_walk_log) {
    const double eta1 = eta0 + options_.log_sigma2_step_sd * rng.standard_normal();
    const double g1 = log_target(eta1);
    if (std::log(rng.uniform_open()) < g1 - g0) {
      eta_new = eta1;
      g_new = g1;
    }
  } else {
    // Stepping-out and shrinkage (Neal 2003).
    const double level = g0 + std::log(rng.uniform_open());
    const double w = options_.slice_width;
    double left = eta0 - w * rng.uniform();
    double right = left + w;
    int j = static_cast<int>(std::floor(options_.slice_max_steps * rng.uniform()));
    int k = options_.slice_max_steps - 1 - j;
    while (j-- > 0 && log_target(left) > level) left -= w;
    while (k-- > 0 && log_target(right) > level) right += w;
    for (;;) {
      const double eta1 = left + (right - left) * rng.uniform();
      const double g1 = log_target(eta1);
      if (g1 > level) {
        eta_new = eta1;
        g_new = g1;
        break;
      }
      if (eta1 < eta0) {
        left = eta1;
      } else {
        right = eta1;
      }
      if (right - left < 1e-14) break;  // slice collapsed onto the current point
    }
  }
  if (eta_new != eta0) {
    // The full conditional differs from the joint posterior by a sigma2-free
    // constant, so the change in one is the change in the other.
    log_posterior_ += (g_new - eta_new) - (g0 - eta0);
    state_.sigma2 = std::exp(eta_new);
  }
}

GeoStepInfo GeoSampler::step(RngStream& rng) {
  const double sd = std::sqrt(options_.proposal_variance);
  GeoState proposal = state_;
  proposal.tau2 += sd * rng.standard_normal();
  proposal.phi += sd * rng.standard_normal();
  proposal.beta += sd * rng.standard_normal();
  GeoStepInfo info;
  info.joint_accepted = accept_joint(proposal, rng);
  update_sigma2(rng);
  return info;
}

GeoStepResult geo_mh_step(const GeoState& state, const GeoData& data, RngStream& rng,
                          const GeoSamplerOptions& options) {
  GeoSampler sampler(data, state, options);
  GeoStepResult result;
  result.accepted = sampler.step(rng).joint_accepted;
  result.state = sampler.state();
  return result;
}

GeoData synth_geo_data(RngStream& rng, std::size_t n_sites, const GeoState& truth,
                       const GeoRegion& region) {
  if (n_sites < 3) throw Error("synthetic data needs at least three sites");
  if (!geo_in_support(truth)) throw Error("generating state lies outside the prior support");
  if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min)) {
    throw Error("synthetic region must have positive extent");
  }
  GeoData data;
  data.sites.resize(n_sites);
  for (auto& s : data.sites) {
    s.x = region.x_min + (region.x_max - region.x_min) * rng.uniform();
    s.y = region.y_min + (region.y_max - region.y_min) * rng.uniform();
  }
  const auto n = static_cast<Eigen::Index>(n_sites);
  data.covariate.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) data.covariate[i] = data.sites[i].y;
  const Eigen::MatrixXd sigma = covariance_from(geo_correlation(data.sites, truth.phi), truth);
  data.response = draw_mvn(rng, truth.beta * data.covariate, sigma);
  data.validate();
  return data;
}

void write_geo_data_csv(std::ostream& out, const GeoData& data) {
  out << "x,y,X,Z\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", data.sites[i].x, data.sites[i].y,
                       data.covariate[k], data.response[k]);
  }
}

GeoData read_geo_data_csv(std::istream& in) {
  const TraceTable table = read_trace_csv(in);
  const std::size_t x = table.index_of("x");
  const std::size_t y = table.index_of("y");
  const std::size_t cov = table.index_of("X");
  const std::size_t resp = table.index_of("Z");
  GeoData data;
  const auto n = static_cast<Eigen::Index>(table.rows());
  data.sites.resize(table.rows());
  data.covariate.resize(n);
  data.response.resize(n);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    data.sites[i] = {table.columns[x][i], table.columns[y][i]};
    data.covariate[static_cast<Eigen::Index>(i)] = table.columns[cov][i];
    data.response[static_cast<Eigen::Index>(i)] = table.columns[resp][i];
  }
  data.validate();
  return data;
}

GeoData read_geo_data_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return read_geo_data_csv(in);
}

}  // namespace mcse

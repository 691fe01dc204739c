#pragma once

// Corrected potential scale reduction factor (R-hat) for m parallel chains and
// its 97.5% upper bound, following the Gelman-Rubin / Brooks-Gelman recipe as
// implemented by R's coda::gelman.diag.

#include <cstddef>
#include <vector>

#include "mcse/traces.hpp"

namespace mcse {

struct BetweenWithin {
  double between = 0.0;  // B = l/(m-1) sum_j (Ybar_j - Ybar)^2
  double within = 0.0;   // W = mean of the within-chain sample variances
  std::vector<double> chain_means;
  std::vector<double> chain_variances;
};

/// Throws DegenerateVarianceError when W = 0.
BetweenWithin between_within(const MultiChainTrace& multi);

/// How the degrees of freedom d of V-hat are formed.
enum class PooledDofForm {
  moment_matched,  // d = 2 V^2 / var(V), the chi-square moment match (default)
  printed,         // d = 2 V / var(V), as some references print it
};

/// How the second F degrees of freedom w for the upper bound are formed.
enum class WithinDofForm {
  per_chain,  // w = 2 W^2 / sigma2_W (default)
  coda,       // w = 2 W^2 / (sigma2_W / m), as coda::gelman.diag computes it
};

struct PsrfOptions {
  double upper_probability = 0.975;
  PooledDofForm pooled_dof = PooledDofForm::moment_matched;
  WithinDofForm within_dof = WithinDofForm::per_chain;
};

struct PsrfReport {
  std::size_t chains = 0;  // m
  std::size_t length = 0;  // l, draws per chain used
  double between = 0.0;    // B
  double within = 0.0;     // W
  double v_hat = 0.0;
  double var_v_hat = 0.0;
  double dof = 0.0;        // d; +inf when var_v_hat == 0
  double r_hat = 0.0;
  double sigma2_within = 0.0;  // sample variance of the s_j^2 across chains
  double within_dof = 0.0;     // w; +inf when sigma2_within == 0
  double r_upper = 0.0;
  double upper_probability = 0.975;
};

/// Every field of the report, including r_upper (via psrf_upper).
PsrfReport psrf(const MultiChainTrace& multi, const PsrfOptions& options = {});

/// sqrt((d+3)/(d+1) [ (l-1)/l + F_{p, m-1, w} (m+1)/(m l) B/W ]). When
/// var_v_hat is 0 the (d+3)/(d+1) factor is 1; when sigma2_within is 0 the F
/// quantile is taken with w = inf.
double psrf_upper(const PsrfReport& report);

}  // namespace mcse

#pragma once

// Normal model with unknown mean mu and variance lambda under the prior
// pi(mu, lambda) proportional to lambda^{-1/2}. Summarised by K, ybar and
// ss = sum (y_i - ybar)^2 = (K - 1) s^2.

#include <utility>

#include "mcse/random.hpp"

namespace mcse {

struct ToyData {
  int K = 11;
  double y_bar = 1.0;
  double ss = 14.0;

  /// The settings used throughout the replication studies: E(mu|y) = 1, E(lambda|y) = 2.
  static ToyData reference() { return {11, 1.0, 14.0}; }
  void validate() const;
};

struct ToyState {
  double mu = 0.0;
  double lambda = 1.0;
};

/// (E(mu|y), E(lambda|y)) = (ybar, ss / (K - 4)); requires K > 4.
std::pair<double, double> toy_true_means(const ToyData& data);

/// One Gibbs scan, lambda first then mu:
///   lambda ~ IG((K-1)/2, (ss + K (ybar - mu_old)^2) / 2),  mu ~ N(ybar, lambda / K).
ToyState toy_gibbs_step(const ToyState& state, const ToyData& data, RngStream& rng);

/// Exact posterior draw: lambda ~ IG((K-2)/2, ss/2), then mu ~ N(ybar, lambda / K).
ToyState toy_exact_draw(const ToyData& data, RngStream& rng);

}  // namespace mcse

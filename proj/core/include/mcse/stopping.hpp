#pragma once

// Sequential stopping rules.
//
//   fixed width:   t_{a-1} sigma_hat / sqrt(n) + eps * I(n < n*) <= eps   for every functional
//   Gelman-Rubin:  R_upper + delta * I(n < n*) <= delta                   for every functional
//
// The padding term makes stopping before the minimum effort n* impossible
// (except for a fixed-width check whose half-widths are all exactly zero).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcse/batch_means.hpp"
#include "mcse/gelman_rubin.hpp"
#include "mcse/traces.hpp"

namespace mcse {

/// Spacing between successive checks: either a relative rate (next = floor(n
/// (1 + rate))) or an absolute number of extra iterations.
struct Growth {
  enum class Kind { relative, absolute };
  Kind kind = Kind::relative;
  double amount = 0.10;

  static Growth relative(double rate) { return {Kind::relative, rate}; }
  static Growth absolute(double iterations) { return {Kind::absolute, iterations}; }
};

/// max(current + 1, floor(current * (1 + growth))); strictly increasing.
std::size_t next_check_size(std::size_t current, double growth);
/// As above for relative growth; current + max(1, amount) for absolute growth.
std::size_t next_check_size(std::size_t current, const Growth& growth);

inline constexpr std::size_t kDefaultMaxDraws = 10'000'000;

struct FixedWidthRule {
  std::vector<double> epsilons;  // one cutoff per functional, in table order
  std::size_t n_star = 400;
  double confidence = 0.95;
  double theta = 0.5;
  Growth growth = Growth::relative(0.10);
  std::size_t max_draws = kDefaultMaxDraws;

  void validate() const;
};

struct GrdRule {
  double delta = 1.1;
  std::size_t chains = 2;
  std::size_t n_star = 400;  // minimum total draws across all chains
  Growth growth = Growth::relative(0.10);  // applied to the per-chain length
  bool discard_first_half = true;
  std::size_t max_draws = kDefaultMaxDraws;
  PsrfOptions psrf;

  void validate() const;
  /// Smallest per-chain length whose total effort reaches n_star.
  std::size_t min_chain_length() const noexcept { return (n_star + chains - 1) / chains; }
};

struct CriterionValue {
  std::string functional;
  double value = 0.0;      // left-hand side of the rule, padding included
  double threshold = 0.0;  // eps or delta
  double statistic = 0.0;  // half-width or R_upper without padding
  double point = 0.0;      // current point estimate
  bool met = false;
};

struct StopDecision {
  bool stop = false;
  std::size_t n_at_decision = 0;
  bool degenerate = false;  // some functional had W = 0; never stops on it
  std::vector<CriterionValue> per_functional;

  const CriterionValue& at(const std::string& functional) const;
};

/// Evaluates the fixed-width rule on one trace per functional (all of equal
/// length n). Throws mcse::Error on unequal lengths.
StopDecision fixed_width_check(const TraceTable& traces, const FixedWidthRule& rule);

/// Evaluates the fixed-width rule from incrementally maintained trackers.
StopDecision fixed_width_check(std::span<const std::string> names,
                               std::span<const CbmTracker> trackers, const FixedWidthRule& rule);

/// One multi-chain trace per functional; n is the total number of draws
/// simulated (including any half that will be discarded).
struct MultiChainTable {
  std::vector<std::string> names;
  std::vector<MultiChainTrace> functionals;
};

/// Evaluates the GRD rule. A functional whose within-chain variance is zero
/// is reported as not met (value +inf) with `degenerate` set and a warning.
StopDecision grd_check(const MultiChainTable& multi, const GrdRule& rule);

}  // namespace mcse

#include "mcse/stopping.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mcse/error.hpp"
#include "mcse/log.hpp"

namespace mcse {

std::size_t next_check_size(std::size_t current, double growth) {
  if (current < 1) throw Error("check size must be at least 1");
  const auto grown =
      static_cast<std::size_t>(std::floor(static_cast<double>(current) * (1.0 + growth)));
  return std::max(current + 1, grown);
}

std::size_t next_check_size(std::size_t current, const Growth& growth) {
  if (growth.kind == Growth::Kind::relative) return next_check_size(current, growth.amount);
  if (current < 1) throw Error("check size must be at least 1");
  const auto step = static_cast<std::size_t>(std::max(1.0, std::floor(growth.amount)));
  return current + step;
}

void FixedWidthRule::validate() const {
  if (epsilons.empty()) throw Error("fixed-width rule needs at least one cutoff");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw Error("fixed-width cutoffs must be positive");
  }
  if (n_star < 4) throw Error("fixed-width minimum effort must be at least 4");
  if (!(growth.amount > 0.0)) throw Error("growth must be positive");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw Error("theta must lie in (0, 1)");
}

void GrdRule::validate() const {
  if (!(delta > 1.0)) throw Error("GRD cutoff delta must exceed 1");
  if (chains < 2) throw Error("GRD needs at least two chains");
  if (!(growth.amount > 0.0)) throw Error("growth must be positive");
}

const CriterionValue& StopDecision::at(const std::string& functional) const {
  for (const auto& c : per_functional) {
    if (c.functional == functional) return c;
  }
  throw Error(fmt::format("no criterion for '{}'", functional));
}

namespace {

CriterionValue fixed_width_criterion(const std::string& name, const CbmEstimate& est, double eps,
                                     std::size_t n, std::size_t n_star) {
  CriterionValue c;
  c.functional = name;
  c.threshold = eps;
  c.statistic = est.half_width;
  c.point = est.point;
  c.value = est.half_width + (n < n_star ? eps : 0.0);
  c.met = c.value <= eps;
  return c;
}

}  // namespace

StopDecision fixed_width_check(const TraceTable& traces, const FixedWidthRule& rule) {
  rule.validate();
  if (traces.columns.size() != rule.epsilons.size()) {
    throw Error("fixed-width rule needs one cutoff per functional");
  }
  const std::size_t n = traces.rows();
  for (const auto& c : traces.columns) {
    if (c.size() != n) throw Error("all traces must have the same length");
  }
  const CbmOptions options{rule.theta, rule.confidence};
  StopDecision d;
  d.n_at_decision = n;
  d.stop = true;
  for (std::size_t k = 0; k < traces.columns.size(); ++k) {
    const auto est = cbm_variance(traces.columns[k], options);
    d.per_functional.push_back(
        fixed_width_criterion(traces.names[k], est, rule.epsilons[k], n, rule.n_star));
    d.stop = d.stop && d.per_functional.back().met;
  }
  return d;
}

StopDecision fixed_width_check(std::span<const std::string> names,
                               std::span<const CbmTracker> trackers, const FixedWidthRule& rule) {
  rule.validate();
  if (trackers.size() != rule.epsilons.size() || names.size() != trackers.size()) {
    throw Error("fixed-width rule needs one cutoff per functional");
  }
  const std::size_t n = trackers.front().size();
  for (const auto& t : trackers) {
    if (t.size() != n) throw Error("all traces must have the same length");
  }
  StopDecision d;
  d.n_at_decision = n;
  d.stop = true;
  for (std::size_t k = 0; k < trackers.size(); ++k) {
    d.per_functional.push_back(fixed_width_criterion(names[k], trackers[k].estimate(),
                                                     rule.epsilons[k], n, rule.n_star));
    d.stop = d.stop && d.per_functional.back().met;
  }
  return d;
}

StopDecision grd_check(const MultiChainTable& multi, const GrdRule& rule) {
  rule.validate();
  if (multi.functionals.empty() || multi.functionals.size() != multi.names.size()) {
    throw Error("GRD check needs one named multi-chain trace per functional");
  }
  const std::size_t n = multi.functionals.front().total_draws();
  for (const auto& f : multi.functionals) {
    if (f.chain_count() != rule.chains) throw Error("chain count does not match the GRD rule");
    if (f.total_draws() != n) throw Error("all functionals must have the same draws");
  }

  StopDecision d;
  d.n_at_decision = n;
  d.stop = true;
  const double padding = n < rule.n_star ? rule.delta : 0.0;
  for (std::size_t k = 0; k < multi.functionals.size(); ++k) {
    CriterionValue c;
    c.functional = multi.names[k];
    c.threshold = rule.delta;
    const MultiChainTrace working = rule.discard_first_half
                                        ? retain_last_half(multi.functionals[k])
                                        : multi.functionals[k];
    c.point = pooled_mean(working);
    try {
      c.statistic = psrf(working, rule.psrf).r_upper;
    } catch (const DegenerateVarianceError&) {
      log_warning(fmt::format("'{}': within-chain variance is zero at n = {}; continuing",
                              c.functional, n));
      c.statistic = std::numeric_limits<double>::infinity();
      d.degenerate = true;
    }
    c.value = c.statistic + padding;
    c.met = c.value <= rule.delta;
    d.stop = d.stop && c.met;
    d.per_functional.push_back(std::move(c));
  }
  return d;
}

}  // namespace mcse

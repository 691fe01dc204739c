#include "mcse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "mcse/error.hpp"
#include "mcse/summation.hpp"

namespace mcse {

const char* to_string(Method method) noexcept { return method == Method::cbm ? "cbm" : "grd"; }

Method parse_method(const std::string& text) {
  if (text == "cbm") return Method::cbm;
  if (text == "grd") return Method::grd;
  throw Error(fmt::format("unknown method '{}'", text));
}

std::size_t StudyResult::failed_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(replications.begin(), replications.end(), [](const auto& r) { return r.failed; }));
}

namespace {

const std::vector<std::string> kToyFunctionals = {"mu", "lambda"};

// Runs body(i) for i in [0, count) over `workers` threads. Results must be
// written to slot i only, which keeps the output independent of scheduling.
template <class Body>
void for_each_replication(std::size_t count, unsigned workers, Body&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (n_threads == 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(drain);
  }
  if (error) std::rethrow_exception(error);
}

void record_decisions(ReplicationResult& result, const StopDecision& decision) {
  for (const auto& c : decision.per_functional) {
    result.decisions.push_back(
        {result.rep_id, decision.n_at_decision, c.functional, c.value, c.threshold, c.met});
  }
}

struct ToyChain {
  const ToyData* data;
  ToyState state;
  RngStream rng;

  void advance() { state = toy_gibbs_step(state, *data, rng); }
  std::array<double, 2> current() const { return {state.mu, state.lambda}; }
};

struct GeoChain {
  GeoSampler sampler;
  RngStream rng;

  void advance() { sampler.step(rng); }
  std::array<double, 4> current() const {
    const auto& s = sampler.state();
    return {s.tau2, s.sigma2, s.phi, s.beta};
  }
};

// Single chain; draws are recorded after each transition (the start itself
// is not a draw). Checks at n*, then at next_check_size(n, growth).
template <class Chain>
ReplicationResult cbm_replication(Chain& chain, std::size_t rep_id,
                                  const std::vector<std::string>& names,
                                  const FixedWidthRule& rule, bool trace) {
  const CbmOptions options{rule.theta, rule.confidence};
  std::vector<CbmTracker> trackers(names.size(), CbmTracker(options));
  ReplicationResult result;
  result.rep_id = rep_id;
  std::size_t next_check = std::min(rule.n_star, rule.max_draws);
  for (;;) {
    chain.advance();
    const auto values = chain.current();
    for (std::size_t k = 0; k < trackers.size(); ++k) trackers[k].push(values[k]);
    const std::size_t n = trackers.front().size();
    if (n < next_check) continue;

    const StopDecision decision = fixed_width_check(names, trackers, rule);
    if (trace) record_decisions(result, decision);
    if (decision.stop || n >= rule.max_draws) {
      result.n_total = n;
      result.failed = !decision.stop;
      result.stopped_at_minimum = decision.stop && n == rule.n_star;
      for (std::size_t k = 0; k < trackers.size(); ++k) {
        const CbmEstimate est = trackers[k].estimate();
        result.estimates.push_back(est.point);
        result.statistics.push_back(est.mcse);
        result.half_widths.push_back(est.half_width);
      }
      return result;
    }
    next_check = std::min(next_check_size(n, rule.growth), rule.max_draws);
  }
}

// m chains; each start is the first draw of its chain. Chains grow together
// from the per-chain minimum by next_check_size(L, growth). The headline
// estimate pools the same draws the rule looked at.
template <class Chain>
ReplicationResult grd_replication(std::vector<Chain>& chains, std::size_t rep_id,
                                  const std::vector<std::string>& names, const GrdRule& rule,
                                  bool trace) {
  const std::size_t m = chains.size();
  std::vector<std::vector<ScalarTrace>> traces(names.size(), std::vector<ScalarTrace>(m));
  for (std::size_t c = 0; c < m; ++c) {
    const auto values = chains[c].current();
    for (std::size_t k = 0; k < names.size(); ++k) traces[k][c].push_back(values[k]);
  }
  ReplicationResult result;
  result.rep_id = rep_id;
  const std::size_t min_length = rule.min_chain_length();
  const std::size_t max_length = std::max<std::size_t>(min_length, rule.max_draws / m);
  std::size_t length = min_length;
  for (;;) {
    for (std::size_t c = 0; c < m; ++c) {
      while (traces.front()[c].size() < length) {
        chains[c].advance();
        const auto values = chains[c].current();
        for (std::size_t k = 0; k < names.size(); ++k) traces[k][c].push_back(values[k]);
      }
    }
    MultiChainTable table;
    table.names = names;
    for (const auto& per_chain : traces) table.functionals.emplace_back(per_chain);
    const StopDecision decision = grd_check(table, rule);
    if (trace) record_decisions(result, decision);
    if (decision.stop || length >= max_length) {
      result.n_total = m * length;
      result.failed = !decision.stop;
      result.stopped_at_minimum = decision.stop && length == min_length;
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto& multi = table.functionals[k];
        result.estimates.push_back(rule.discard_first_half ? pooled_mean(retain_last_half(multi))
                                                           : pooled_mean(multi));
        result.full_chain_estimates.push_back(pooled_mean(multi));
        result.statistics.push_back(decision.per_functional[k].statistic);
      }
      return result;
    }
    length = std::min(next_check_size(length, rule.growth), max_length);
  }
}

}  // namespace

void ToyStudyConfig::validate() const {
  data.validate();
  if (replications < 1) throw Error("at least one replication is required");
  if (method == Method::cbm && !(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (method == Method::grd) {
    if (!(delta > 1.0)) throw Error("delta must exceed 1");
    if (chains < 2 || chains > kMaxChains) {
      throw Error(fmt::format("chains must lie in [2, {}]", kMaxChains));
    }
  }
  if (!(growth > 0.0)) throw Error("growth must be positive");
  if (max_draws < n_star) throw Error("draw cap is below the minimum effort");
}

StudyResult run_toy_cbm(const ToyStudyConfig& config) {
  config.validate();
  FixedWidthRule rule;
  rule.epsilons = {config.epsilon, config.epsilon};
  rule.n_star = config.n_star;
  rule.growth = Growth::relative(config.growth);
  rule.max_draws = config.max_draws;
  rule.validate();

  const auto [mu, lambda] = toy_true_means(config.data);
  StudyResult study;
  study.label = fmt::format("toy-cbm-eps{}", config.epsilon);
  study.method = Method::cbm;
  study.functionals = kToyFunctionals;
  study.truth = {mu, lambda};
  study.replications.resize(config.replications);
  for_each_replication(config.replications, config.workers, [&](std::size_t r) {
    ToyChain chain{&config.data, ToyState{config.data.y_bar, 0.0},
                   RngStream(config.seed, replication_stream_id(r, 0, kMaxChains))};
    study.replications[r] =
        cbm_replication(chain, r, kToyFunctionals, rule, config.trace_decisions);
  });
  return study;
}

StudyResult run_toy_grd(const ToyStudyConfig& config) {
  config.validate();
  GrdRule rule;
  rule.delta = config.delta;
  rule.chains = config.chains;
  rule.n_star = config.n_star;
  rule.growth = Growth::relative(config.growth);
  rule.discard_first_half = config.discard_first_half;
  rule.psrf = config.psrf;
  rule.max_draws = config.max_draws;
  rule.validate();

  RngStream start_rng(config.seed, kReservedStreamBase);
  std::vector<ToyState> starts;
  for (std::size_t c = 0; c < config.chains; ++c) {
    starts.push_back(toy_exact_draw(config.data, start_rng));
  }

  const auto [mu, lambda] = toy_true_means(config.data);
  StudyResult study;
  study.label = fmt::format("toy-grd-m{}-delta{}", config.chains, config.delta);
  study.method = Method::grd;
  study.functionals = kToyFunctionals;
  study.truth = {mu, lambda};
  study.replications.resize(config.replications);
  for_each_replication(config.replications, config.workers, [&](std::size_t r) {
    std::vector<ToyChain> chains;
    for (std::size_t c = 0; c < config.chains; ++c) {
      chains.push_back(ToyChain{&config.data, starts[c],
                                RngStream(config.seed, replication_stream_id(r, c, kMaxChains))});
    }
    study.replications[r] =
        grd_replication(chains, r, kToyFunctionals, rule, config.trace_decisions);
  });
  return study;
}

StudyResult run_toy_study(const ToyStudyConfig& config) {
  return config.method == Method::cbm ? run_toy_cbm(config) : run_toy_grd(config);
}

// ---------------------------------------------------------------------------

std::vector<double> GeoPilot::truth() const {
  std::vector<double> out;
  for (const auto& p : parameters) out.push_back(p.mean);
  return out;
}

GeoState GeoPilot::start_state(std::size_t k) const {
  if (k >= kPilotPercentiles.size()) throw Error("percentile index out of range");
  if (parameters.size() != 4) throw Error("pilot must describe four parameters");
  std::vector<double> v;
  for (const auto& p : parameters) v.push_back(p.percentiles[k]);
  return geo_state_from(v);
}

std::size_t default_pilot_iterations(std::size_t sites) {
  constexpr std::size_t base = 500'000;
  constexpr std::size_t reference_sites = 365;
  if (sites == 0) throw Error("site count must be positive");
  if (sites >= reference_sites) return base;
  return (base * reference_sites + sites - 1) / sites;
}

GeoPilot run_geo_pilot(const GeoData& data, const GeoPilotConfig& config) {
  if (config.iterations < 4) throw Error("pilot run is too short");
  RngStream rng(config.seed, kReservedStreamBase + 1);
  GeoSampler sampler(data, config.start, config.sampler);
  for (std::size_t i = 0; i < config.burn_in; ++i) sampler.step(rng);

  const auto& names = geo_parameter_names();
  std::vector<std::vector<double>> draws(names.size());
  for (auto& d : draws) d.reserve(config.iterations);
  for (std::size_t i = 0; i < config.iterations; ++i) {
    sampler.step(rng);
    const auto v = to_vector(sampler.state());
    for (std::size_t k = 0; k < names.size(); ++k) draws[k].push_back(v[k]);
  }

  GeoPilot pilot;
  pilot.iterations = config.iterations;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const CbmEstimate est = cbm_variance(draws[k]);
    PilotParameter p;
    p.name = names[k];
    p.mean = est.point;
    p.mcse = est.mcse;
    std::sort(draws[k].begin(), draws[k].end());
    for (std::size_t q = 0; q < kPilotPercentiles.size(); ++q) {
      p.percentiles[q] = sorted_quantile(draws[k], kPilotPercentiles[q]);
    }
    pilot.parameters.push_back(p);
  }
  return pilot;
}

void GeoStudyConfig::validate() const {
  if (grd_replications < 1 || cbm_replications < 1) {
    throw Error("both study arms need at least one replication");
  }
  if (grd_chains < 2 || grd_chains > kPilotPercentiles.size()) {
    throw Error("geostatistical GRD uses between two and four percentile starts");
  }
  if (!(delta > 1.0)) throw Error("delta must exceed 1");
  if (cbm_step < 1) throw Error("CBM check spacing must be at least one iteration");
}

GeoStudyResult run_geo_study(const GeoData& data, const GeoPilot& pilot,
                             const GeoStudyConfig& config) {
  config.validate();
  data.validate();
  const auto& names = geo_parameter_names();
  std::array<GeoState, 4> starts;
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = pilot.start_state(k);

  GrdRule grd_rule;
  grd_rule.delta = config.delta;
  grd_rule.chains = config.grd_chains;
  grd_rule.n_star = config.grd_n_star;
  grd_rule.growth = Growth::relative(config.grd_growth);
  grd_rule.discard_first_half = config.grd_discard_first_half;
  grd_rule.psrf = config.psrf;
  grd_rule.max_draws = config.max_draws;
  grd_rule.validate();

  FixedWidthRule cbm_rule;
  cbm_rule.epsilons.assign(config.epsilons.begin(), config.epsilons.end());
  cbm_rule.n_star = config.cbm_n_star;
  cbm_rule.growth = Growth::absolute(static_cast<double>(config.cbm_step));
  cbm_rule.max_draws = config.max_draws;
  cbm_rule.validate();

  GeoStudyResult out;
  out.grd.label = "geo-grd";
  out.grd.method = Method::grd;
  out.grd.functionals = names;
  out.grd.truth = pilot.truth();
  out.grd.replications.resize(config.grd_replications);
  out.cbm.label = "geo-cbm";
  out.cbm.method = Method::cbm;
  out.cbm.functionals = names;
  out.cbm.truth = pilot.truth();
  out.cbm.replications.resize(config.cbm_replications);

  // Replication ids of the CBM arm follow those of the GRD arm.
  const std::size_t total = config.grd_replications + config.cbm_replications;
  for_each_replication(total, config.workers, [&](std::size_t i) {
    if (i < config.grd_replications) {
      std::vector<GeoChain> chains;
      for (std::size_t c = 0; c < config.grd_chains; ++c) {
        chains.push_back(GeoChain{GeoSampler(data, starts[c], config.sampler),
                                  RngStream(config.seed, replication_stream_id(i, c, kMaxChains))});
      }
      out.grd.replications[i] = grd_replication(chains, i, names, grd_rule, config.trace_decisions);
    } else {
      const std::size_t r = i - config.grd_replications;
      const std::size_t k = r * starts.size() / config.cbm_replications;
      GeoChain chain{GeoSampler(data, starts[k], config.sampler),
                     RngStream(config.seed, replication_stream_id(i, 0, kMaxChains))};
      auto result = cbm_replication(chain, r, names, cbm_rule, config.trace_decisions);
      result.start_index = static_cast<int>(k);
      out.cbm.replications[r] = std::move(result);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

const FunctionalSummary& SummaryTable::at(const std::string& functional) const {
  for (const auto& f : functionals) {
    if (f.name == functional) return f;
  }
  throw Error(fmt::format("no summary for '{}'", functional));
}

namespace {

Estimate mean_with_se(const std::vector<double>& values) {
  const double r = static_cast<double>(values.size());
  const double mean = compensated_sum(values) / r;
  if (values.size() < 2) return {mean, 0.0};
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  return {mean, std::sqrt(ss.value() / (r - 1.0)) / std::sqrt(r)};
}

}  // namespace

Estimate mean_squared_error(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw Error("no estimates to summarise");
  std::vector<double> squared;
  squared.reserve(estimates.size());
  for (double e : estimates) squared.push_back((e - truth) * (e - truth));
  return mean_with_se(squared);
}

Estimate proportion(std::size_t hits, std::size_t total) {
  if (total == 0) throw Error("no replications to summarise");
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

SummaryTable summarize(const StudyResult& study, EstimateSource source) {
  if (study.replications.empty()) throw Error("no replications to summarise");
  if (study.truth.size() != study.functionals.size()) {
    throw Error("study truth must have one value per functional");
  }
  SummaryTable table;
  table.label = study.label;
  table.failed = study.failed_count();
  std::vector<const ReplicationResult*> ok;
  for (const auto& r : study.replications) {
    if (!r.failed) ok.push_back(&r);
  }
  table.replications = ok.size();
  if (ok.empty()) throw Error("every replication failed");
  if (source == EstimateSource::full_chain && study.method != Method::grd) {
    throw Error("full-chain estimates exist only for GRD studies");
  }

  for (std::size_t k = 0; k < study.functionals.size(); ++k) {
    FunctionalSummary f;
    f.name = study.functionals[k];
    f.truth = study.truth[k];
    std::vector<double> values;
    std::size_t covered = 0;
    for (const auto* r : ok) {
      const double v = source == EstimateSource::headline ? r->estimates.at(k)
                                                          : r->full_chain_estimates.at(k);
      values.push_back(v);
      if (study.method == Method::cbm && std::abs(v - f.truth) <= r->half_widths.at(k)) ++covered;
    }
    f.mse = mean_squared_error(values, f.truth);
    if (study.method == Method::cbm) f.coverage = proportion(covered, ok.size());
    table.functionals.push_back(std::move(f));
  }

  std::size_t at_min = 0;
  std::size_t small = 0;
  std::vector<double> efforts;
  for (const auto* r : ok) {
    at_min += r->stopped_at_minimum ? 1 : 0;
    small += r->n_total <= 1000 ? 1 : 0;
    efforts.push_back(static_cast<double>(r->n_total));
  }
  table.at_minimum = proportion(at_min, ok.size());
  table.at_most_1000 = proportion(small, ok.size());
  table.mean_effort = mean_with_se(efforts);
  return table;
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double interquartile_range(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, 0.75) - sorted_quantile(values, 0.25);
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
  if (values.empty()) throw Error("histogram of an empty sample");
  if (bins < 1) throw Error("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Histogram h;
  if (lo == hi) {
    h.edges = {lo, hi};
    h.counts = {values.size()};
    return h;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto i = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(i, bins - 1)]++;
  }
  return h;
}

Histogram emit_histogram(const StudyResult& study, const std::string& functional,
                         std::size_t bins) {
  const auto it = std::find(study.functionals.begin(), study.functionals.end(), functional);
  if (it == study.functionals.end()) throw Error(fmt::format("unknown functional '{}'", functional));
  const auto k = static_cast<std::size_t>(it - study.functionals.begin());
  std::vector<double> values;
  for (const auto& r : study.replications) {
    if (!r.failed) values.push_back(r.estimates.at(k));
  }
  return make_histogram(values, bins);
}

GeoDatasetParams default_geo_design(std::size_t sites, std::uint64_t seed) {
  GeoDatasetParams p;
  p.seed = seed;
  p.sites = sites;
  // A long strip: site distances span several ranges even at the largest
  // phi the prior allows, which keeps phi identifiable with 50 sites.
  p.truth = GeoState{5.0, 20.0, 5.0, 4.0};
  p.region = GeoRegion{0.0, 36.0, 0.0, 4.0};
  return p;
}

GeoData synth_geo_data(const GeoDatasetParams& params) {
  RngStream rng(params.seed, 0);
  return synth_geo_data(rng, params.sites, params.truth, params.region);
}

}  // namespace mcse

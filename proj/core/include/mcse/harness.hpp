#pragma once

// Replication studies comparing fixed-width (CBM) and Gelman-Rubin (GRD)
// stopping: the toy normal model and the synthetic geostatistical model.
//
// Stream assignment: replication r, chain c draws from stream
// replication_stream_id(r, c, kMaxChains) of the master seed, so results do
// not depend on how replications are spread over workers.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcse/geo_model.hpp"
#include "mcse/stopping.hpp"
#include "mcse/toy_model.hpp"

namespace mcse {

inline constexpr std::uint64_t kMaxChains = 16;

enum class Method { cbm, grd };
const char* to_string(Method method) noexcept;
Method parse_method(const std::string& text);

/// One stopping-rule evaluation, kept only when decision tracing is on.
struct DecisionRecord {
  std::size_t rep_id = 0;
  std::size_t n = 0;
  std::string functional;
  double value = 0.0;
  double threshold = 0.0;
  bool met = false;
};

struct ReplicationResult {
  std::size_t rep_id = 0;
  std::size_t n_total = 0;
  bool stopped_at_minimum = false;
  bool failed = false;  // hit the draw cap before the rule was met
  int start_index = -1;  // geo CBM arm: which percentile start was used
  std::vector<double> estimates;   // per functional; GRD: the draws the rule used
  std::vector<double> statistics;  // MCSE under CBM, R_upper under GRD
  std::vector<double> half_widths;           // CBM only
  std::vector<double> full_chain_estimates;  // GRD only: pooled mean of entire chains
  std::vector<DecisionRecord> decisions;
};

struct StudyResult {
  std::string label;
  Method method = Method::cbm;
  std::vector<std::string> functionals;
  std::vector<double> truth;
  std::vector<ReplicationResult> replications;

  std::size_t failed_count() const noexcept;
};

struct ToyStudyConfig {
  Method method = Method::cbm;
  ToyData data = ToyData::reference();
  double epsilon = 0.06;          // CBM half-width cutoff, shared by mu and lambda
  double delta = 1.1;             // GRD cutoff
  std::size_t chains = 2;         // GRD chains
  bool discard_first_half = true;
  PsrfOptions psrf;
  std::size_t n_star = 400;
  double growth = 0.10;
  std::size_t max_draws = kDefaultMaxDraws;
  std::size_t replications = 1000;
  std::uint64_t seed = 20240917;
  unsigned workers = 1;
  bool trace_decisions = false;

  void validate() const;
};

/// Each replication starts at mu = ybar; draws are recorded after each Gibbs
/// scan and the rule is checked at n*, then at each 10%-grown size.
StudyResult run_toy_cbm(const ToyStudyConfig& config);

/// Starting states are exact posterior draws taken once from a reserved
/// stream and shared by every replication; each start is the first draw of
/// its chain. The per-chain minimum is ceil(n* / m) and growth is per chain.
StudyResult run_toy_grd(const ToyStudyConfig& config);

StudyResult run_toy_study(const ToyStudyConfig& config);

// ---------------------------------------------------------------------------
// Geostatistical study

struct PilotParameter {
  std::string name;
  double mean = 0.0;
  double mcse = 0.0;
  std::array<double, 4> percentiles{};  // 10th, 30th, 70th, 90th
};

inline constexpr std::array<double, 4> kPilotPercentiles = {0.10, 0.30, 0.70, 0.90};

struct GeoPilot {
  std::size_t iterations = 0;
  std::vector<PilotParameter> parameters;  // tau2, sigma2, phi, beta

  std::vector<double> truth() const;
  /// State whose every coordinate sits at percentile index k (0..3).
  GeoState start_state(std::size_t k) const;
};

/// 500,000 iterations at 365 sites, lengthened in proportion for fewer sites
/// so the pilot truth stays precise relative to a single replication.
std::size_t default_pilot_iterations(std::size_t sites);

struct GeoPilotConfig {
  std::size_t iterations = 500'000;
  std::size_t burn_in = 10'000;
  std::uint64_t seed = 20240917;
  GeoState start;
  GeoSamplerOptions sampler;
};

GeoPilot run_geo_pilot(const GeoData& data, const GeoPilotConfig& config);

struct GeoStudyConfig {
  std::size_t grd_replications = 100;
  std::size_t cbm_replications = 400;
  std::size_t grd_chains = 4;
  double delta = 1.1;
  std::size_t grd_n_star = 1000;
  double grd_growth = 0.10;
  bool grd_discard_first_half = false;
  PsrfOptions psrf;
  std::array<double, 4> epsilons = {0.5, 0.5, 0.05, 0.05};
  std::size_t cbm_n_star = 1000;
  std::size_t cbm_step = 10;
  std::size_t max_draws = kDefaultMaxDraws;
  std::uint64_t seed = 20240917;
  unsigned workers = 1;
  bool trace_decisions = false;
  GeoSamplerOptions sampler;

  void validate() const;
};

struct GeoStudyResult {
  StudyResult grd;
  StudyResult cbm;
};

/// GRD arm: m chains started at the pilot percentiles (chain j at the j-th
/// percentile of every parameter). CBM arm: one chain per replication, the
/// replications split evenly over the four percentile starts.
GeoStudyResult run_geo_study(const GeoData& data, const GeoPilot& pilot,
                             const GeoStudyConfig& config);

// ---------------------------------------------------------------------------
// Summaries

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct FunctionalSummary {
  std::string name;
  double truth = 0.0;
  Estimate mse;
  std::optional<Estimate> coverage;  // CBM only: interval covers the truth
};

struct SummaryTable {
  std::string label;
  std::size_t replications = 0;  // successful replications summarised
  std::size_t failed = 0;
  std::vector<FunctionalSummary> functionals;
  Estimate at_minimum;   // proportion stopped at the minimum effort
  Estimate at_most_1000;  // proportion with n_total <= 1000
  Estimate mean_effort;

  const FunctionalSummary& at(const std::string& functional) const;
};

enum class EstimateSource { headline, full_chain };

/// MSE against the study truth (S.E. = sd of squared errors / sqrt(R)),
/// binomial standard errors for proportions, mean effort with its S.E.
/// Failed replications are counted but excluded. Throws on empty input.
SummaryTable summarize(const StudyResult& study, EstimateSource source = EstimateSource::headline);

/// Same as summarize, with explicit per-replication estimates.
Estimate mean_squared_error(const std::vector<double>& estimates, double truth);
Estimate proportion(std::size_t hits, std::size_t total);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over the observed range
  std::vector<std::size_t> counts;
};

/// Fixed-width bins over [min, max] of the non-failed replications' headline
/// estimates of `functional`; all-equal values fall in a single bin.
Histogram emit_histogram(const StudyResult& study, const std::string& functional,
                         std::size_t bins);
Histogram make_histogram(const std::vector<double>& values, std::size_t bins);

/// Interquartile range with type-7 quantiles.
double interquartile_range(std::vector<double> values);
/// Type-7 (linear interpolation) sample quantile of sorted values.
double sorted_quantile(const std::vector<double>& sorted, double p);

// ---------------------------------------------------------------------------
// Persistence

void write_replications_csv(std::ostream& out, const StudyResult& study);
void write_replications_csv(const std::filesystem::path& path, const StudyResult& study);
/// Inverse of write_replications_csv (decision records are not persisted).
StudyResult read_replications_csv(std::istream& in);
StudyResult read_replications_csv(const std::filesystem::path& path);

void write_summary_csv(std::ostream& out, const SummaryTable& summary);
void write_summary_csv(const std::filesystem::path& path, const SummaryTable& summary);
void write_decisions_csv(std::ostream& out, const StudyResult& study);
void write_histogram_csv(std::ostream& out, const Histogram& histogram);

void write_pilot_csv(std::ostream& out, const GeoPilot& pilot);
void write_pilot_csv(const std::filesystem::path& path, const GeoPilot& pilot);
GeoPilot read_pilot_csv(std::istream& in);
GeoPilot read_pilot_csv(const std::filesystem::path& path);

/// Generating parameters of a synthetic dataset, stored as key=value lines
/// next to the dataset CSV.
struct GeoDatasetParams {
  std::uint64_t seed = 0;
  std::size_t sites = 0;
  GeoState truth;
  GeoRegion region;
};

void write_geo_params(std::ostream& out, const GeoDatasetParams& params);
GeoDatasetParams read_geo_params(std::istream& in);
std::filesystem::path geo_params_path(const std::filesystem::path& dataset);

/// Default synthetic design used by `geo synth` and the acceptance suite.
GeoDatasetParams default_geo_design(std::size_t sites, std::uint64_t seed);
GeoData synth_geo_data(const GeoDatasetParams& params);

}  // namespace mcse

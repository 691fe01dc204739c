#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mcse/error.hpp"
#include "mcse/harness.hpp"

namespace {

using mcse::Method;
using mcse::ReplicationResult;
using mcse::StudyResult;

std::string to_csv(const StudyResult& s) {
  std::ostringstream out;
  mcse::write_replications_csv(out, s);
  return out.str();
}

mcse::ToyStudyConfig small_toy(Method method) {
  mcse::ToyStudyConfig c;
  c.method = method;
  c.replications = 24;
  c.seed = 77;
  return c;
}

StudyResult synthetic_study(Method method) {
  StudyResult s;
  s.label = "synthetic";
  s.method = method;
  s.functionals = {"g"};
  s.truth = {0.0};
  return s;
}

ReplicationResult rep(std::size_t id, double estimate, std::size_t n, bool at_min = false) {
  ReplicationResult r;
  r.rep_id = id;
  r.n_total = n;
  r.stopped_at_minimum = at_min;
  r.estimates = {estimate};
  r.statistics = {0.1};
  r.half_widths = {0.5};
  r.full_chain_estimates = {estimate};
  return r;
}

TEST(Summarize, ExactEstimatesHaveZeroError) {
  auto s = synthetic_study(Method::cbm);
  for (std::size_t i = 0; i < 5; ++i) s.replications.push_back(rep(i, 0.0, 400, true));
  const auto t = mcse::summarize(s);
  EXPECT_EQ(t.at("g").mse.value, 0.0);
  EXPECT_EQ(t.at("g").mse.se, 0.0);
  EXPECT_EQ(t.at_minimum.value, 1.0);
  EXPECT_EQ(t.at_minimum.se, 0.0);
  EXPECT_EQ(t.at("g").coverage->value, 1.0);
}

TEST(Summarize, TwoReplicationHandExample) {
  auto s = synthetic_study(Method::grd);
  s.replications = {rep(0, 0.0, 500), rep(1, std::sqrt(2.0), 1500)};
  const auto t = mcse::summarize(s);
  EXPECT_NEAR(t.at("g").mse.value, 1.0, 1e-15);
  EXPECT_NEAR(t.at("g").mse.se, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(t.mean_effort.value, 1000.0);
  EXPECT_DOUBLE_EQ(t.mean_effort.se, 500.0);
  EXPECT_DOUBLE_EQ(t.at_most_1000.value, 0.5);
  EXPECT_DOUBLE_EQ(t.at_most_1000.se, 0.5 / std::sqrt(2.0));
  EXPECT_FALSE(t.at("g").coverage.has_value());
}

TEST(Summarize, FailedReplicationsCountedNotUsed) {
  auto s = synthetic_study(Method::cbm);
  s.replications = {rep(0, 1.0, 400), rep(1, 100.0, 10'000'000), rep(2, 1.0, 400)};
  s.replications[1].failed = true;
  const auto t = mcse::summarize(s);
  EXPECT_EQ(t.failed, 1u);
  EXPECT_EQ(t.replications, 2u);
  EXPECT_DOUBLE_EQ(t.at("g").mse.value, 1.0);
}

TEST(Summarize, EmptyInputThrows) {
  EXPECT_THROW(mcse::summarize(synthetic_study(Method::cbm)), mcse::Error);
  EXPECT_THROW(mcse::proportion(0, 0), mcse::Error);
  EXPECT_THROW(mcse::mean_squared_error({}, 0.0), mcse::Error);
}

TEST(Summarize, PermutationInvariant) {
  auto s = synthetic_study(Method::cbm);
  std::mt19937_64 gen(70);
  std::normal_distribution<double> z;
  for (std::size_t i = 0; i < 200; ++i) {
    auto r = rep(i, 0.1 * z(gen), 400 + gen() % 2000, gen() % 3 == 0);
    r.half_widths = {0.05 + 0.1 * std::abs(z(gen))};
    s.replications.push_back(r);
  }
  const auto a = mcse::summarize(s);
  std::shuffle(s.replications.begin(), s.replications.end(), gen);
  const auto b = mcse::summarize(s);
  EXPECT_NEAR(a.at("g").mse.value, b.at("g").mse.value, 1e-15);
  EXPECT_NEAR(a.at("g").mse.se, b.at("g").mse.se, 1e-15);
  EXPECT_EQ(a.at("g").coverage->value, b.at("g").coverage->value);
  EXPECT_EQ(a.at_minimum.value, b.at_minimum.value);
  EXPECT_NEAR(a.mean_effort.value, b.mean_effort.value, 1e-9);
}

TEST(Histogram, ConservesCountsAndHandlesTies) {
  const auto same = mcse::make_histogram({2.0, 2.0, 2.0}, 10);
  ASSERT_EQ(same.counts.size(), 1u);
  EXPECT_EQ(same.counts[0], 3u);

  std::vector<double> v(1000);
  std::mt19937_64 gen(71);
  std::normal_distribution<double> z;
  for (auto& x : v) x = z(gen);
  const auto h = mcse::make_histogram(v, 25);
  EXPECT_EQ(h.edges.size(), 26u);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), v.size());
  EXPECT_EQ(h.edges.front(), *std::min_element(v.begin(), v.end()));
  EXPECT_EQ(h.edges.back(), *std::max_element(v.begin(), v.end()));
}

TEST(Quantiles, TypeSeven) {
  EXPECT_DOUBLE_EQ(mcse::sorted_quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(mcse::sorted_quantile({1, 2, 3, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(mcse::interquartile_range({4, 1, 3, 2}), 1.5);
}

TEST(ToyStudy, CbmReplicationsRespectMinimum) {
  const auto s = mcse::run_toy_cbm(small_toy(Method::cbm));
  ASSERT_EQ(s.replications.size(), 24u);
  EXPECT_EQ(s.truth, (std::vector<double>{1.0, 2.0}));
  for (const auto& r : s.replications) {
    EXPECT_FALSE(r.failed);
    EXPECT_GE(r.n_total, 400u);
    EXPECT_EQ(r.stopped_at_minimum, r.n_total == 400);
    for (double hw : r.half_widths) EXPECT_LE(hw, 0.06);
  }
}

TEST(ToyStudy, CbmCheckScheduleFollowsGrowth) {
  auto c = small_toy(Method::cbm);
  c.replications = 3;
  c.trace_decisions = true;
  const auto s = mcse::run_toy_cbm(c);
  for (const auto& r : s.replications) {
    std::vector<std::size_t> ns;
    for (const auto& d : r.decisions)
      if (ns.empty() || ns.back() != d.n) ns.push_back(d.n);
    ASSERT_FALSE(ns.empty());
    EXPECT_EQ(ns.front(), 400u);
    for (std::size_t i = 1; i < ns.size(); ++i) {
      EXPECT_EQ(ns[i], mcse::next_check_size(ns[i - 1], 0.10));
    }
    EXPECT_EQ(ns.back(), r.n_total);
  }
}

TEST(ToyStudy, GrdEffortAccounting) {
  auto c = small_toy(Method::grd);
  c.chains = 4;
  c.delta = 1.1;
  c.trace_decisions = true;
  const auto s = mcse::run_toy_grd(c);
  for (const auto& r : s.replications) {
    EXPECT_EQ(r.n_total % 4, 0u);
    EXPECT_GE(r.n_total, 400u);
    EXPECT_EQ(r.stopped_at_minimum, r.n_total == 400);
    EXPECT_EQ(r.decisions.front().n, 400u);
    for (double stat : r.statistics) EXPECT_LE(stat, 1.1);
  }
}

TEST(ToyStudy, DeterministicAcrossWorkerCounts) {
  for (Method m : {Method::cbm, Method::grd}) {
    auto c = small_toy(m);
    c.workers = 1;
    const auto a = to_csv(mcse::run_toy_study(c));
    c.workers = 4;
    const auto b = to_csv(mcse::run_toy_study(c));
    EXPECT_EQ(a, b);
    c.seed += 1;
    EXPECT_NE(a, to_csv(mcse::run_toy_study(c)));
  }
}

TEST(ToyStudy, DrawCapFlagsFailure) {
  auto c = small_toy(Method::cbm);
  c.epsilon = 1e-6;
  c.max_draws = 2000;
  c.replications = 3;
  const auto s = mcse::run_toy_cbm(c);
  EXPECT_EQ(s.failed_count(), 3u);
  for (const auto& r : s.replications) EXPECT_EQ(r.n_total, 2000u);
  EXPECT_THROW(mcse::summarize(s), mcse::Error);
}

TEST(ToyStudy, ConfigValidation) {
  auto c = small_toy(Method::grd);
  c.delta = 1.0;
  EXPECT_THROW(c.validate(), mcse::Error);
  c = small_toy(Method::grd);
  c.chains = 17;
  EXPECT_THROW(c.validate(), mcse::Error);
  c = small_toy(Method::cbm);
  c.replications = 0;
  EXPECT_THROW(c.validate(), mcse::Error);
}

TEST(Persistence, ReplicationCsvRoundTrip) {
  for (Method m : {Method::cbm, Method::grd}) {
    const auto s = mcse::run_toy_study(small_toy(m));
    std::stringstream io(to_csv(s));
    auto back = mcse::read_replications_csv(io);
    EXPECT_EQ(back.method, m);
    EXPECT_EQ(back.functionals, s.functionals);
    ASSERT_EQ(back.replications.size(), s.replications.size());
    back.truth = s.truth;
    back.label = s.label;
    const auto a = mcse::summarize(s);
    const auto b = mcse::summarize(back);
    for (const auto& f : s.functionals) {
      EXPECT_NEAR(a.at(f).mse.value, b.at(f).mse.value, 1e-12 * a.at(f).mse.value);
    }
    EXPECT_EQ(to_csv(back), to_csv(s));
  }
}

TEST(Persistence, SummaryAndHistogramCsv) {
  const auto s = mcse::run_toy_cbm(small_toy(Method::cbm));
  std::ostringstream out;
  mcse::write_summary_csv(out, mcse::summarize(s));
  EXPECT_NE(out.str().find("mse,mu,"), std::string::npos);
  EXPECT_NE(out.str().find("coverage,lambda,"), std::string::npos);
  std::ostringstream hist;
  mcse::write_histogram_csv(hist, mcse::emit_histogram(s, "mu", 5));
  const std::string text = hist.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_THROW(mcse::emit_histogram(s, "nope", 5), mcse::Error);
}

TEST(GeoPilot, DefaultLengthScalesWithSites) {
  EXPECT_EQ(mcse::default_pilot_iterations(365), 500'000u);
  EXPECT_EQ(mcse::default_pilot_iterations(1000), 500'000u);
  EXPECT_EQ(mcse::default_pilot_iterations(50), 3'650'000u);
  EXPECT_GT(mcse::default_pilot_iterations(49), mcse::default_pilot_iterations(50));
  EXPECT_THROW(mcse::default_pilot_iterations(0), mcse::Error);
}

TEST(Persistence, GeoParamsRoundTrip) {
  const auto p = mcse::default_geo_design(50, 9);
  std::stringstream io;
  mcse::write_geo_params(io, p);
  const auto q = mcse::read_geo_params(io);
  EXPECT_EQ(q.seed, 9u);
  EXPECT_EQ(q.sites, 50u);
  EXPECT_EQ(q.truth, p.truth);
  EXPECT_EQ(q.region.x_max, p.region.x_max);
  EXPECT_EQ(mcse::geo_params_path("data/geo.csv").string(), "data/geo.csv.params");
}

class GeoHarness : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    params_ = mcse::default_geo_design(12, 5);
    data_ = mcse::synth_geo_data(params_);
    mcse::GeoPilotConfig pc;
    pc.iterations = 4000;
    pc.burn_in = 500;
    pc.seed = 5;
    pc.start = params_.truth;
    pilot_ = mcse::run_geo_pilot(data_, pc);
  }

  static mcse::GeoStudyConfig small_config() {
    mcse::GeoStudyConfig c;
    c.grd_replications = 3;
    c.cbm_replications = 8;
    c.grd_n_star = 200;
    c.cbm_n_star = 200;
    c.epsilons = {2.0, 4.0, 0.5, 0.3};
    c.seed = 6;
    return c;
  }

  static inline mcse::GeoDatasetParams params_;
  static inline mcse::GeoData data_;
  static inline mcse::GeoPilot pilot_;
};

TEST_F(GeoHarness, PilotPercentilesOrdered) {
  ASSERT_EQ(pilot_.parameters.size(), 4u);
  for (const auto& p : pilot_.parameters) {
    EXPECT_GT(p.mcse, 0.0);
    EXPECT_LE(p.percentiles[0], p.percentiles[1]);
    EXPECT_LE(p.percentiles[1], p.percentiles[2]);
    EXPECT_LE(p.percentiles[2], p.percentiles[3]);
  }
  for (std::size_t k = 0; k < 4; ++k) EXPECT_TRUE(mcse::geo_in_support(pilot_.start_state(k)));
}

TEST_F(GeoHarness, PilotReproducibleAndRoundTrips) {
  mcse::GeoPilotConfig pc;
  pc.iterations = 4000;
  pc.burn_in = 500;
  pc.seed = 5;
  pc.start = params_.truth;
  std::ostringstream a, b;
  mcse::write_pilot_csv(a, pilot_);
  mcse::write_pilot_csv(b, mcse::run_geo_pilot(data_, pc));
  EXPECT_EQ(a.str(), b.str());
  std::stringstream io(a.str());
  std::ostringstream c;
  mcse::write_pilot_csv(c, mcse::read_pilot_csv(io));
  EXPECT_EQ(c.str(), a.str());
}

TEST_F(GeoHarness, StudyShapeAndDeterminism) {
  auto c = small_config();
  c.workers = 1;
  const auto a = mcse::run_geo_study(data_, pilot_, c);
  c.workers = 4;
  const auto b = mcse::run_geo_study(data_, pilot_, c);
  EXPECT_EQ(to_csv(a.grd), to_csv(b.grd));
  EXPECT_EQ(to_csv(a.cbm), to_csv(b.cbm));

  ASSERT_EQ(a.grd.replications.size(), 3u);
  ASSERT_EQ(a.cbm.replications.size(), 8u);
  EXPECT_EQ(a.cbm.truth, pilot_.truth());
  for (const auto& r : a.grd.replications) {
    EXPECT_GE(r.n_total, 200u);
    EXPECT_EQ(r.n_total % 4, 0u);
    // No burn-in in this arm: the estimate is the full-chain mean.
    EXPECT_EQ(r.estimates, r.full_chain_estimates);
  }
  std::vector<int> per_start(4, 0);
  for (const auto& r : a.cbm.replications) {
    EXPECT_GE(r.n_total, 200u);
    EXPECT_EQ((r.n_total - 200) % 10, 0u);
    ++per_start.at(static_cast<std::size_t>(r.start_index));
  }
  EXPECT_EQ(per_start, (std::vector<int>{2, 2, 2, 2}));
}

}  // namespace

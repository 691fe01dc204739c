// mcse: MCMC output analysis and replication studies from the command line.
//
//   mcse diag chain1.csv [chain2.csv ...]
//   mcse toy --method cbm --epsilon 0.04 --reps 1000 --out results/cbm2
//   mcse geo synth --sites 50 --seed 7 --out data/geo.csv
//   mcse geo pilot --data data/geo.csv --out data/pilot.csv
//   mcse geo run --data data/geo.csv --pilot data/pilot.csv --out results/geo
//   mcse --config cbm2.toml toy

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mcse/batch_means.hpp"
#include "mcse/error.hpp"
#include "mcse/gelman_rubin.hpp"
#include "mcse/harness.hpp"
#include "mcse/log.hpp"
#include "mcse/traces.hpp"

namespace fs = std::filesystem;
using namespace mcse;

namespace {

struct DiagArgs {
  std::vector<std::string> files;
  double theta = 0.5;
  double confidence = 0.95;
  std::string out;
};

struct ToyArgs {
  std::string method = "cbm";
  double epsilon = 0.06;
  double delta = 1.1;
  std::size_t chains = 2;
  std::size_t reps = 1000;
  std::uint64_t seed = 20240917;
  bool no_burn_in = false;
  std::string out = "toy-results";
  unsigned workers = 1;
  bool trace_decisions = false;
  std::size_t bins = 30;
  std::string within_dof = "per-chain";
  std::string pooled_dof = "moment";
};

struct GeoArgs {
  std::size_t sites = 50;
  std::uint64_t seed = 20240917;
  std::string data = "geo.csv";
  std::string pilot = "pilot.csv";
  std::string out;
  std::size_t iterations = 0;  // 0: scaled by site count
  std::size_t burn_in = 10'000;
  std::size_t grd_reps = 100;
  std::size_t cbm_reps = 400;
  unsigned workers = 1;
  bool trace_decisions = false;
  std::string sigma2_update = "slice";
};

std::ostream* open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  file.open(p);
  if (!file) throw Error(fmt::format("cannot write '{}'", path));
  return &file;
}

int run_diag(const DiagArgs& args) {
  std::vector<TraceTable> tables;
  for (const auto& f : args.files) tables.push_back(read_trace_csv(fs::path(f)));
  for (const auto& t : tables) {
    if (t.names != tables.front().names) throw Error("all trace files must share one header");
  }
  const CbmOptions options{args.theta, args.confidence};
  std::ofstream file;
  std::ostream& out = *open_output(args.out, file);
  out << "functional,chain,n,point,mcse,half_width,significant_figures,r_hat,r_upper\n";
  for (std::size_t k = 0; k < tables.front().names.size(); ++k) {
    const auto& name = tables.front().names[k];
    std::string r_hat = "";
    std::string r_upper = "";
    if (tables.size() > 1) {
      std::vector<ScalarTrace> chains;
      for (const auto& t : tables) chains.push_back(t.columns[k]);
      try {
        const auto report = psrf(MultiChainTrace(std::move(chains)));
        r_hat = fmt::format("{:.17g}", report.r_hat);
        r_upper = fmt::format("{:.17g}", report.r_upper);
      } catch (const DegenerateVarianceError& e) {
        std::cerr << fmt::format("warning: '{}': {}\n", name, e.what());
        r_hat = r_upper = "inf";
      }
    }
    for (std::size_t c = 0; c < tables.size(); ++c) {
      const auto est = cbm_variance(tables[c].columns[k], options);
      out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{},{},{}\n", name, c, est.n, est.point,
                         est.mcse, est.half_width,
                         significant_figures(est.point, est.half_width), r_hat, r_upper);
    }
  }
  return 0;
}

void print_summary(const SummaryTable& s) {
  fmt::print("{}: {} replications ({} failed)\n", s.label, s.replications + s.failed, s.failed);
  for (const auto& f : s.functionals) {
    fmt::print("  {:<8} truth {:.6g}  MSE {:.4e} (s.e. {:.2e})", f.name, f.truth, f.mse.value,
               f.mse.se);
    if (f.coverage) fmt::print("  coverage {:.3f} ({:.3f})", f.coverage->value, f.coverage->se);
    fmt::print("\n");
  }
  fmt::print("  at minimum {:.3f} ({:.3f})  n <= 1000 {:.3f} ({:.3f})  mean effort {:.1f} ({:.1f})\n",
             s.at_minimum.value, s.at_minimum.se, s.at_most_1000.value, s.at_most_1000.se,
             s.mean_effort.value, s.mean_effort.se);
}

void write_study(const fs::path& dir, const StudyResult& study, const SummaryTable& summary,
                 bool decisions, std::size_t bins) {
  fs::create_directories(dir);
  write_replications_csv(dir / "replications.csv", study);
  write_summary_csv(dir / "summary.csv", summary);
  if (decisions) {
    std::ofstream out(dir / "decisions.csv");
    write_decisions_csv(out, study);
  }
  if (bins > 0) {
    for (const auto& f : study.functionals) {
      std::ofstream out(dir / fmt::format("histogram_{}.csv", f));
      write_histogram_csv(out, emit_histogram(study, f, bins));
    }
  }
}

WithinDofForm parse_within_dof(const std::string& text) {
  return text == "coda" ? WithinDofForm::coda : WithinDofForm::per_chain;
}

int run_toy(const ToyArgs& args) {
  ToyStudyConfig config;
  config.method = parse_method(args.method);
  config.epsilon = args.epsilon;
  config.delta = args.delta;
  config.chains = args.chains;
  config.replications = args.reps;
  config.seed = args.seed;
  config.workers = args.workers;
  config.trace_decisions = args.trace_decisions;
  config.psrf.within_dof = parse_within_dof(args.within_dof);
  config.psrf.pooled_dof =
      args.pooled_dof == "printed" ? PooledDofForm::printed : PooledDofForm::moment_matched;
  const StudyResult study = run_toy_study(config);
  const auto source = args.no_burn_in && config.method == Method::grd ? EstimateSource::full_chain
                                                                      : EstimateSource::headline;
  const SummaryTable summary = summarize(study, source);
  write_study(args.out, study, summary, args.trace_decisions, args.bins);
  print_summary(summary);
  return study.failed_count() == 0 ? 0 : 2;
}

int run_geo_synth(const GeoArgs& args) {
  const GeoDatasetParams params = default_geo_design(args.sites, args.seed);
  const GeoData data = synth_geo_data(params);
  const fs::path path = args.out.empty() ? fs::path(args.data) : fs::path(args.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  write_geo_data_csv(out, data);
  std::ofstream sidecar(geo_params_path(path));
  write_geo_params(sidecar, params);
  fmt::print("wrote {} sites to {}\n", data.size(), path.string());
  return 0;
}

GeoSamplerOptions sampler_options(const GeoArgs& args) {
  GeoSamplerOptions options;
  if (args.sigma2_update == "slice") {
    options.sigma2_update = Sigma2Update::slice;
  } else if (args.sigma2_update == "rw") {
    options.sigma2_update = Sigma2Update::random_walk_log;
  } else {
    throw Error(fmt::format("unknown sigma2 update '{}'", args.sigma2_update));
  }
  return options;
}

int run_geo_pilot_cmd(const GeoArgs& args) {
  const GeoData data = read_geo_data_csv(fs::path(args.data));
  GeoPilotConfig config;
  config.iterations = args.iterations > 0 ? args.iterations : default_pilot_iterations(data.sites.size());
  config.burn_in = args.burn_in;
  config.seed = args.seed;
  config.sampler = sampler_options(args);
  std::ifstream sidecar(geo_params_path(args.data));
  if (sidecar) config.start = read_geo_params(sidecar).truth;
  const GeoPilot pilot = run_geo_pilot(data, config);
  const fs::path path = args.out.empty() ? fs::path(args.pilot) : fs::path(args.out);
  write_pilot_csv(path, pilot);
  write_pilot_csv(std::cout, pilot);
  return 0;
}

int run_geo_study_cmd(const GeoArgs& args) {
  const GeoData data = read_geo_data_csv(fs::path(args.data));
  const GeoPilot pilot = read_pilot_csv(fs::path(args.pilot));
  GeoStudyConfig config;
  config.grd_replications = args.grd_reps;
  config.cbm_replications = args.cbm_reps;
  config.seed = args.seed;
  config.workers = args.workers;
  config.trace_decisions = args.trace_decisions;
  config.sampler = sampler_options(args);
  const GeoStudyResult result = run_geo_study(data, pilot, config);
  const fs::path dir = args.out.empty() ? fs::path("geo-results") : fs::path(args.out);
  const SummaryTable grd = summarize(result.grd);
  const SummaryTable cbm = summarize(result.cbm);
  write_study(dir / "grd", result.grd, grd, args.trace_decisions, 0);
  write_study(dir / "cbm", result.cbm, cbm, args.trace_decisions, 0);
  print_summary(grd);
  print_summary(cbm);
  return result.grd.failed_count() + result.cbm.failed_count() == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCMC output analysis: batch means standard errors, Gelman-Rubin diagnostics "
               "and stopping-rule replication studies"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.set_config("--config", "", "Experiment config (TOML/INI, keys as the long flags, one section per subcommand)");

  DiagArgs diag;
  auto* diag_cmd = app.add_subcommand("diag", "Batch means MCSE (and PSRF for several chains) of trace CSVs");
  diag_cmd->add_option("files", diag.files, "Trace CSV, one per chain")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--theta", diag.theta, "Batch size exponent")->check(CLI::Range(0.0, 1.0));
  diag_cmd->add_option("--confidence", diag.confidence, "Interval level")->check(CLI::Range(0.0, 1.0));
  diag_cmd->add_option("--out", diag.out, "Report CSV (default stdout)");

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toy", "Toy normal model replication study");
  toy_cmd->set_config("--config", "", "Config file with the same keys as the flags");
  toy_cmd->add_option("--method", toy.method, "cbm or grd")->check(CLI::IsMember({"cbm", "grd"}));
  toy_cmd->add_option("--epsilon", toy.epsilon, "CBM half-width cutoff");
  toy_cmd->add_option("--delta", toy.delta, "GRD cutoff on R_upper");
  toy_cmd->add_option("--chains", toy.chains, "GRD chains");
  toy_cmd->add_option("--reps", toy.reps, "Replications");
  toy_cmd->add_option("--seed", toy.seed, "Master seed");
  toy_cmd->add_flag("--no-burn-in", toy.no_burn_in, "Summarise GRD with entire chains");
  toy_cmd->add_option("--out", toy.out, "Output directory");
  toy_cmd->add_option("--workers", toy.workers, "Worker threads");
  toy_cmd->add_flag("--trace-decisions", toy.trace_decisions, "Write every rule evaluation");
  toy_cmd->add_option("--bins", toy.bins, "Histogram bins (0 disables)");
  toy_cmd->add_option("--within-dof", toy.within_dof, "F denominator dof: per-chain or coda")
      ->check(CLI::IsMember({"per-chain", "coda"}));
  toy_cmd->add_option("--pooled-dof", toy.pooled_dof, "Pooled variance dof: moment or printed")
      ->check(CLI::IsMember({"moment", "printed"}));

  GeoArgs geo;
  auto* geo_cmd = app.add_subcommand("geo", "Synthetic geostatistical study");
  geo_cmd->require_subcommand(1);
  auto add_common = [&geo](CLI::App* cmd) {
    cmd->set_config("--config", "", "Config file with the same keys as the flags");
    cmd->add_option("--seed", geo.seed, "Master seed");
    cmd->add_option("--out", geo.out, "Output path");
  };
  auto* synth_cmd = geo_cmd->add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth_cmd);
  synth_cmd->add_option("--sites", geo.sites, "Number of sites")->check(CLI::Range(3, 365));
  synth_cmd->add_option("--data", geo.data, "Dataset CSV (used when --out is absent)");

  auto* pilot_cmd = geo_cmd->add_subcommand("pilot", "Long pilot run: truth and percentile starts");
  add_common(pilot_cmd);
  pilot_cmd->add_option("--data", geo.data, "Dataset CSV")->check(CLI::ExistingFile);
  pilot_cmd->add_option("--iterations", geo.iterations, "Pilot length (default 500000 x 365 / sites, at least 500000)");
  pilot_cmd->add_option("--burn-in", geo.burn_in, "Iterations discarded before the pilot");
  pilot_cmd->add_option("--sigma2-update", geo.sigma2_update, "slice or rw");

  auto* run_cmd = geo_cmd->add_subcommand("run", "GRD and CBM arms of the study");
  add_common(run_cmd);
  run_cmd->add_option("--data", geo.data, "Dataset CSV")->check(CLI::ExistingFile);
  run_cmd->add_option("--pilot", geo.pilot, "Pilot CSV")->check(CLI::ExistingFile);
  run_cmd->add_option("--grd-reps", geo.grd_reps, "GRD replications");
  run_cmd->add_option("--cbm-reps", geo.cbm_reps, "CBM replications");
  run_cmd->add_option("--workers", geo.workers, "Worker threads");
  run_cmd->add_flag("--trace-decisions", geo.trace_decisions, "Write every rule evaluation");
  run_cmd->add_option("--sigma2-update", geo.sigma2_update, "slice or rw");

  CLI11_PARSE(app, argc, argv);
  set_warnings_enabled(!quiet);

  try {
    if (*diag_cmd) return run_diag(diag);
    if (*toy_cmd) return run_toy(toy);
    if (*synth_cmd) return run_geo_synth(geo);
    if (*pilot_cmd) return run_geo_pilot_cmd(geo);
    if (*run_cmd) return run_geo_study_cmd(geo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

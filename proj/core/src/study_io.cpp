#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "mcse/error.hpp"
#include "mcse/harness.hpp"

namespace mcse {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw Error(fmt::format("malformed number '{}'", text));
  return value;
}

std::uint64_t parse_unsigned(const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(fmt::format("malformed count '{}'", text));
  }
  return value;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::ifstream open_for_reading(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return in;
}

}  // namespace

void write_replications_csv(std::ostream& out, const StudyResult& study) {
  const bool cbm = study.method == Method::cbm;
  out << "rep_id,n_total,stopped_at_minimum,failed,start_index";
  for (const auto& f : study.functionals) {
    out << ",est_" << f << ",stat_" << f << (cbm ? ",hw_" : ",full_") << f;
  }
  out << '\n';
  for (const auto& r : study.replications) {
    out << fmt::format("{},{},{},{},{}", r.rep_id, r.n_total, r.stopped_at_minimum ? 1 : 0,
                       r.failed ? 1 : 0, r.start_index);
    for (std::size_t k = 0; k < study.functionals.size(); ++k) {
      const double extra = cbm ? r.half_widths.at(k) : r.full_chain_estimates.at(k);
      out << fmt::format(",{:.17g},{:.17g},{:.17g}", r.estimates.at(k), r.statistics.at(k), extra);
    }
    out << '\n';
  }
}

void write_replications_csv(const std::filesystem::path& path, const StudyResult& study) {
  auto out = open_for_writing(path);
  write_replications_csv(out, study);
}

StudyResult read_replications_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty replication file");
  const auto header = split_csv(trim(line));
  if (header.size() < 8 || (header.size() - 5) % 3 != 0 || header[0] != "rep_id") {
    throw Error("unrecognised replication header");
  }
  StudyResult study;
  study.method = starts_with(header[7], "hw_") ? Method::cbm : Method::grd;
  for (std::size_t i = 5; i < header.size(); i += 3) {
    if (!starts_with(header[i], "est_")) throw Error("unrecognised replication header");
    study.functionals.push_back(header[i].substr(4));
  }
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) throw Error("replication row has the wrong width");
    ReplicationResult r;
    r.rep_id = parse_unsigned(fields[0]);
    r.n_total = parse_unsigned(fields[1]);
    r.stopped_at_minimum = fields[2] == "1";
    r.failed = fields[3] == "1";
    r.start_index = std::stoi(fields[4]);
    for (std::size_t i = 5; i < fields.size(); i += 3) {
      r.estimates.push_back(parse_double(fields[i]));
      r.statistics.push_back(parse_double(fields[i + 1]));
      (study.method == Method::cbm ? r.half_widths : r.full_chain_estimates)
          .push_back(parse_double(fields[i + 2]));
    }
    study.replications.push_back(std::move(r));
  }
  return study;
}

StudyResult read_replications_csv(const std::filesystem::path& path) {
  auto in = open_for_reading(path);
  return read_replications_csv(in);
}

void write_summary_csv(std::ostream& out, const SummaryTable& s) {
  out << "label,metric,functional,value,se\n";
  auto row = [&](const char* metric, const std::string& functional, Estimate e) {
    out << fmt::format("{},{},{},{:.17g},{:.17g}\n", s.label, metric, functional, e.value, e.se);
  };
  row("replications", "", {static_cast<double>(s.replications), 0.0});
  row("failed", "", {static_cast<double>(s.failed), 0.0});
  for (const auto& f : s.functionals) {
    row("truth", f.name, {f.truth, 0.0});
    row("mse", f.name, f.mse);
    if (f.coverage) row("coverage", f.name, *f.coverage);
  }
  row("prop_at_minimum", "", s.at_minimum);
  row("prop_le_1000", "", s.at_most_1000);
  row("mean_effort", "", s.mean_effort);
}

void write_summary_csv(const std::filesystem::path& path, const SummaryTable& summary) {
  auto out = open_for_writing(path);
  write_summary_csv(out, summary);
}

void write_decisions_csv(std::ostream& out, const StudyResult& study) {
  out << "rep_id,n,functional,value,threshold,met\n";
  for (const auto& r : study.replications) {
    for (const auto& d : r.decisions) {
      out << fmt::format("{},{},{},{:.17g},{:.17g},{}\n", d.rep_id, d.n, d.functional, d.value,
                         d.threshold, d.met ? 1 : 0);
    }
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "lower,upper,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << fmt::format("{:.17g},{:.17g},{}\n", h.edges[i], h.edges[i + 1], h.counts[i]);
  }
}

void write_pilot_csv(std::ostream& out, const GeoPilot& pilot) {
  out << "parameter,mean,mcse,p10,p30,p70,p90,iterations\n";
  for (const auto& p : pilot.parameters) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", p.name, p.mean,
                       p.mcse, p.percentiles[0], p.percentiles[1], p.percentiles[2],
                       p.percentiles[3], pilot.iterations);
  }
}

void write_pilot_csv(const std::filesystem::path& path, const GeoPilot& pilot) {
  auto out = open_for_writing(path);
  write_pilot_csv(out, pilot);
}

GeoPilot read_pilot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !starts_with(line, "parameter,mean,mcse")) {
    throw Error("unrecognised pilot header");
  }
  GeoPilot pilot;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8) throw Error("pilot row has the wrong width");
    PilotParameter p;
    p.name = f[0];
    p.mean = parse_double(f[1]);
    p.mcse = parse_double(f[2]);
    for (std::size_t q = 0; q < 4; ++q) p.percentiles[q] = parse_double(f[3 + q]);
    pilot.iterations = parse_unsigned(f[7]);
    pilot.parameters.push_back(p);
  }
  if (pilot.parameters.size() != geo_parameter_names().size()) {
    throw Error("pilot must describe four parameters");
  }
  for (std::size_t k = 0; k < pilot.parameters.size(); ++k) {
    if (pilot.parameters[k].name != geo_parameter_names()[k]) {
      throw Error("pilot parameters are out of order");
    }
  }
  return pilot;
}

GeoPilot read_pilot_csv(const std::filesystem::path& path) {
  auto in = open_for_reading(path);
  return read_pilot_csv(in);
}

void write_geo_params(std::ostream& out, const GeoDatasetParams& p) {
  out << fmt::format("seed={}\nsites={}\n", p.seed, p.sites);
  out << fmt::format("tau2={:.17g}\nsigma2={:.17g}\nphi={:.17g}\nbeta={:.17g}\n", p.truth.tau2,
                     p.truth.sigma2, p.truth.phi, p.truth.beta);
  out << fmt::format("x_min={:.17g}\nx_max={:.17g}\ny_min={:.17g}\ny_max={:.17g}\n",
                     p.region.x_min, p.region.x_max, p.region.y_min, p.region.y_max);
}

GeoDatasetParams read_geo_params(std::istream& in) {
  GeoDatasetParams p;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(fmt::format("malformed parameter line '{}'", line));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") p.seed = parse_unsigned(value);
    else if (key == "sites") p.sites = parse_unsigned(value);
    else if (key == "tau2") p.truth.tau2 = parse_double(value);
    else if (key == "sigma2") p.truth.sigma2 = parse_double(value);
    else if (key == "phi") p.truth.phi = parse_double(value);
    else if (key == "beta") p.truth.beta = parse_double(value);
    else if (key == "x_min") p.region.x_min = parse_double(value);
    else if (key == "x_max") p.region.x_max = parse_double(value);
    else if (key == "y_min") p.region.y_min = parse_double(value);
    else if (key == "y_max") p.region.y_max = parse_double(value);
    else throw Error(fmt::format("unknown parameter '{}'", key));
  }
  return p;
}

std::filesystem::path geo_params_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".params";
  return p;
}

}  // namespace mcse

#include "mcse/traces.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "mcse/error.hpp"
#include "mcse/summation.hpp"

namespace mcse {

ScalarTrace ScalarTrace::tail(std::size_t count) const {
  if (count > values_.size()) throw Error("tail longer than trace");
  return ScalarTrace(std::vector<double>(values_.end() - static_cast<std::ptrdiff_t>(count),
                                         values_.end()));
}

MultiChainTrace::MultiChainTrace(std::vector<ScalarTrace> chains) : chains_(std::move(chains)) {
  if (chains_.size() < 2) throw Error("multi-chain trace needs at least two chains");
  const std::size_t length = chains_.front().size();
  if (length == 0) throw Error("empty trace");
  for (const auto& c : chains_) {
    if (c.size() != length) throw Error("chains of a multi-chain trace must have equal length");
  }
}

double ergodic_average(std::span<const double> draws) {
  if (draws.empty()) throw Error("empty trace");
  return compensated_sum(draws) / static_cast<double>(draws.size());
}

double ergodic_average(const ScalarTrace& trace) { return ergodic_average(trace.values()); }

MultiChainTrace retain_last_half(const MultiChainTrace& multi) {
  const std::size_t length = multi.chain_length();
  if (length < 2) throw Error("need at least two draws per chain to discard half");
  const std::size_t keep = length / 2;
  std::vector<ScalarTrace> tails;
  tails.reserve(multi.chain_count());
  for (const auto& c : multi.chains()) tails.push_back(c.tail(keep));
  return MultiChainTrace(std::move(tails));
}

double pooled_mean(const MultiChainTrace& multi) {
  // Equal lengths make the grand mean equal to the mean of chain means.
  CompensatedSum s;
  for (const auto& c : multi.chains()) s.add(ergodic_average(c));
  return s.value() / static_cast<double>(multi.chain_count());
}

std::size_t TraceTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error(fmt::format("no functional named '{}'", name));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string{}
                                                : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t row) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(fmt::format("row {}: '{}' is not a number", row, text));
  }
  return value;
}

}  // namespace

TraceTable read_trace_csv(std::istream& in) {
  TraceTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error("trace CSV is empty");
  table.names = split_csv_line(line);
  if (table.names.empty()) throw Error("trace CSV header has no columns");
  table.columns.resize(table.names.size());

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != table.names.size()) {
      throw Error(fmt::format("row {}: expected {} fields, found {}", row, table.names.size(),
                              fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      table.columns[j].push_back(parse_double(fields[j], row));
    }
  }
  return table;
}

TraceTable read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return read_trace_csv(in);
}

void write_trace_csv(std::ostream& out, const TraceTable& table) {
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    out << (j ? "," : "") << table.names[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      out << (j ? "," : "") << fmt::format("{:.17g}", table.columns[j][i]);
    }
    out << '\n';
  }
}

}  // namespace mcse

#pragma once

// Containers for Markov chain output and the estimators that only need the
// raw draws: the ergodic average and the pooled multi-chain mean.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mcse {

/// Ordered draws g(X_1), ..., g(X_n) of one real functional from one chain.
/// Append-only: recorded entries are never modified.
class ScalarTrace {
 public:
  ScalarTrace() = default;
  explicit ScalarTrace(std::vector<double> values) : values_(std::move(values)) {}

  void push_back(double value) { values_.push_back(value); }
  void append(std::span<const double> values) {
    values_.insert(values_.end(), values.begin(), values.end());
  }
  void reserve(std::size_t n) { values_.reserve(n); }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Copy of the last `count` draws.
  ScalarTrace tail(std::size_t count) const;

  friend bool operator==(const ScalarTrace&, const ScalarTrace&) = default;

 private:
  std::vector<double> values_;
};

/// m >= 2 equal-length traces of the same functional from parallel chains.
class MultiChainTrace {
 public:
  /// Throws mcse::Error if fewer than two chains are given, if any chain is
  /// empty, or if the chain lengths differ.
  explicit MultiChainTrace(std::vector<ScalarTrace> chains);

  std::size_t chain_count() const noexcept { return chains_.size(); }
  std::size_t chain_length() const noexcept { return chains_.front().size(); }
  std::size_t total_draws() const noexcept { return chain_count() * chain_length(); }
  const ScalarTrace& chain(std::size_t j) const { return chains_.at(j); }
  std::span<const ScalarTrace> chains() const noexcept { return chains_; }

  friend bool operator==(const MultiChainTrace&, const MultiChainTrace&) = default;

 private:
  std::vector<ScalarTrace> chains_;
};

/// Mean of all draws, with compensated summation. Throws on an empty trace.
double ergodic_average(std::span<const double> draws);
double ergodic_average(const ScalarTrace& trace);

/// Keeps the final floor(L/2) draws of each chain of length L (so ceil(L/2)
/// are discarded). Requires L >= 2.
MultiChainTrace retain_last_half(const MultiChainTrace& multi);

/// Grand mean over every draw of every chain.
double pooled_mean(const MultiChainTrace& multi);

/// Named columns of equal length; the in-memory form of a trace CSV file.
struct TraceTable {
  std::vector<std::string> names;
  std::vector<ScalarTrace> columns;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t index_of(const std::string& name) const;
};

// Trace CSV: a header row of functional names, then one row per iteration.
TraceTable read_trace_csv(std::istream& in);
TraceTable read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const TraceTable& table);

}  // namespace mcse

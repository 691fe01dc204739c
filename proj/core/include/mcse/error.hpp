#pragma once

#include <stdexcept>
#include <string>

namespace mcse {

/// Raised when an operation's preconditions on its inputs are violated.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All chains were constant, so the within-chain variance W is zero.
class DegenerateVarianceError : public Error {
 public:
  DegenerateVarianceError() : Error("degenerate within-chain variance") {}
};

}  // namespace mcse

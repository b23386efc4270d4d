#pragma once

#include <stdexcept>
#include <string>

namespace hqf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad node, mismatched
/// domains, degenerate geometry, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to reach its tolerance, or its input was
/// numerically unusable (non-SPD metric, singular frame, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hqf

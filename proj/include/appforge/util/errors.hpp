#pragma once

#include <stdexcept>
#include <string>

namespace appforge {

// Root of every error thrown by the library. Subsystems derive their own
// kinds so callers can catch at the granularity they need.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input from a caller (CLI flags, config files, malformed documents).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace appforge

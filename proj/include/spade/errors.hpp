#pragma once

#include <stdexcept>
#include <string>

namespace spade {

/// Bad arguments or configuration (CLI exit code 1).
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-converged solve, NaN loss, lost invariant (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spade

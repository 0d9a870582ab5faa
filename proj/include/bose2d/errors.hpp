#pragma once

#include <stdexcept>
#include <string>

namespace bose2d {

// Invalid physical parameter (κ ≤ 0, T ≤ 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// API misuse: bad sizes, mismatched bases, missing prerequisites.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration problem. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Z diverges (free zero mode with ν ≥ 0).
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Caps or block sizes exceeded the configured budget before convergence.
class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bose2d

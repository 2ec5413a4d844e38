#pragma once

#include <stdexcept>
#include <string>

namespace kamlattice {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed configuration or descriptor. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

/// Numerical failure that should preserve partial outputs (exit code 1 in the CLI).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace kamlattice

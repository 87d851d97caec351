#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace btrisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (BTD/log/truth JSON, SDL source, CSV traces).
/// Line and column are 1-based; 0 means the position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
      : Error(line ? msg + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"
                   : msg),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A node or variable id was not found, or has the wrong role.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's domain (bad window, degenerate base...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IncompleteStateError : public DomainError {
 public:
  explicit IncompleteStateError(const std::string& variable)
      : DomainError("incomplete state: no value for variable '" + variable + "'"),
        variable_(variable) {}

  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

/// Episode data does not follow the single-threat isolation protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Not enough variation in the data to fit a factor. `constant()` is the
/// Laplace estimate that a caller may use instead of a fitted curve.
class DegenerateDataError : public DomainError {
 public:
  DegenerateDataError(const std::string& msg, double constant)
      : DomainError(msg), constant_(constant) {}

  double constant() const noexcept { return constant_; }

 private:
  double constant_;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Out-of-order samples fed to a streaming assessor.
class StreamError : public Error {
 public:
  using Error::Error;
};

}  // namespace btrisk

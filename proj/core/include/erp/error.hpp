#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required column or key is missing.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations for the requested computation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A window or segment size exceeds the available data.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A statistical estimate could not be formed (too few points, singular design...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace erp

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tickrand {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value outside the domain of an operation (nonpositive price, p outside [0,1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A bit string too short for the requested statistic.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Unknown test id or malformed test catalog.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// Raised by the bit exporter when the certifying battery did not pass.
class ExportRefused : public Error {
 public:
  ExportRefused(const std::string& what, std::vector<std::string> failing)
      : Error(what), failing_(std::move(failing)) {}

  const std::vector<std::string>& failing_tests() const noexcept { return failing_; }

 private:
  std::vector<std::string> failing_;
};

}  // namespace tickrand

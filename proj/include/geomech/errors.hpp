#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geomech {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed DSL text. `offset()` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Function argument outside its domain (log of a nonpositive value, x/0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation produced a non-finite value.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// |det g| at or below the degeneracy threshold.
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// Time constraint whose normalising denominator vanishes at a state.
class NullConstraintError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition (block structure, gate, shape).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Integration aborted; `time()` is the step start where it happened.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double t)
      : Error(what + " (t=" + std::to_string(t) + ")"), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Bad scenario file or command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geomech

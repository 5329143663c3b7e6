#pragma once

#include <stdexcept>
#include <string>

namespace rqm {

/// Process exit codes shared by the CLI and the end-to-end tests.
enum class ExitCode : int {
  Ok = 0,
  Usage = 2,
  Parse = 3,
  Validation = 4,
  NumericalGuard = 5,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two states/operators built on different momentum grids were combined.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// normalize() on a state with norm below 1e-14.
class NullStateError : public Error {
 public:
  using Error::Error;
};

/// Collapse or conditioning on a branch of (near-)zero probability.
class NullOutcomeError : public Error {
 public:
  using Error::Error;
};

/// Combinatorial guards: layer size > 16, enumeration tree > 4096 branches.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// Experiment file I/O, syntax or schema failure. `detail` carries the
/// offending key path or byte position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string detail = {})
      : Error(what), detail_(std::move(detail)) {}
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
};

/// Physics-level rejection (invalid causal arrangement and similar).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rqm

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddstab {

enum class ErrorCode {
  kInvalidInput,
  kInvalidOrder,
  kDivergence,
  kExcitationFailure,
  kInvalidScale,
  kNoFiniteGamma,
  kOracleRequired,
  kExtraction,
  kInsufficientData,
  kIo,
};

const char* to_string(ErrorCode code);

/// Base error for every failure raised by the library. The code lets
/// callers (notably the CLI) map failures onto exit statuses without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by simulation when a state stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(ErrorCode::kDivergence, what), step_(step) {}

  /// Index of the first non-finite state.
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Raised when X0*Q cannot be inverted reliably.
class ExtractionError : public Error {
 public:
  ExtractionError(double min_sv, double max_sv, const std::string& what)
      : Error(ErrorCode::kExtraction, what), min_sv_(min_sv), max_sv_(max_sv) {}

  double min_singular_value() const noexcept { return min_sv_; }
  double max_singular_value() const noexcept { return max_sv_; }

 private:
  double min_sv_;
  double max_sv_;
};

}  // namespace ddstab

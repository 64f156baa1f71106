#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oncodyn {

enum class ErrorCode {
  InvalidArgument,
  StepLimitExceeded,
  NonFiniteDerivative,
  SingularMatrix,
  NoConvergence,
  SingularJacobian,
  NoContraction,
  SingularLyapunov,
  PatternMismatch,
  DivisionByZero,
  NoPositiveRadius,
  EmptyRegion,
  ConfigError,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::NonFiniteDerivative: return "NonFiniteDerivative";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::SingularLyapunov: return "SingularLyapunov";
    case ErrorCode::PatternMismatch: return "PatternMismatch";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::NoPositiveRadius: return "NoPositiveRadius";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oncodyn

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pushpull {

enum class ErrorCode {
  InvalidArgument,
  InfeasibleEdgeCount,
  NotARoot,
  DimensionMismatch,
  ShapeMismatch,
  EigenvectorNotUnique,
  NonConvergence,
  SpectralRadiusTooLarge,
  NumericalFailure,
  SingularSystem,
  GenerationFailure,
  NonFiniteIterate,
  AssumptionViolation,
  StepSizeOutOfRange,
  NotIrreducible,
  DiagonalTooLarge,
  TraceMismatch,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleEdgeCount: return "InfeasibleEdgeCount";
    case ErrorCode::NotARoot: return "NotARoot";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EigenvectorNotUnique: return "EigenvectorNotUnique";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SpectralRadiusTooLarge: return "SpectralRadiusTooLarge";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::AssumptionViolation: return "AssumptionViolation";
    case ErrorCode::StepSizeOutOfRange: return "StepSizeOutOfRange";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::DiagonalTooLarge: return "DiagonalTooLarge";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pushpull

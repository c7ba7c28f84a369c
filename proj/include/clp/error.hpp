#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clp {

enum class ErrorCode {
  NegativeSigma,
  FixedSigmaMismatch,
  InvalidLaw,
  InvalidCovariateLaw,
  InvalidCluster,
  InvalidDataset,
  OrderOutOfRange,
  NonFiniteIntegrand,
  NonFinite,
  SubsetTooLarge,
  BoundaryPoint,
  SolverFailure,
  ZeroCurvature,
  ParseError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeSigma: return "NegativeSigma";
    case ErrorCode::FixedSigmaMismatch: return "FixedSigmaMismatch";
    case ErrorCode::InvalidLaw: return "InvalidLaw";
    case ErrorCode::InvalidCovariateLaw: return "InvalidCovariateLaw";
    case ErrorCode::InvalidCluster: return "InvalidCluster";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::BoundaryPoint: return "BoundaryPoint";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::ZeroCurvature: return "ZeroCurvature";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Numeric failures map to CLI exit code 3, everything else to 2.
  bool is_numeric() const noexcept {
    switch (code_) {
      case ErrorCode::NonFiniteIntegrand:
      case ErrorCode::NonFinite:
      case ErrorCode::BoundaryPoint:
      case ErrorCode::SolverFailure:
      case ErrorCode::ZeroCurvature:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace clp

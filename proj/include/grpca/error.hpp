#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grpca {

/// Failure categories raised across the library. The harness records the
/// kind in result rows, so the spelling returned by `to_string` is stable.
enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NotPositiveDefinite,
  NoConvergence,
  RankTooLarge,
  InvalidParameter,
  Infeasible,
  DegenerateComponent,
  InsufficientBoundary,
  TooFewSamples,
  AllFitsFailed,
  DegenerateLoadings,
  RankDeficient,
  ZeroSubspaceVariance,
  EmptyLoadings,
  ZeroVariance,
  InsufficientData,
  ParseError,
  UnknownKey,
  RangeViolation,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::DegenerateComponent: return "DegenerateComponent";
    case ErrorKind::InsufficientBoundary: return "InsufficientBoundary";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::AllFitsFailed: return "AllFitsFailed";
    case ErrorKind::DegenerateLoadings: return "DegenerateLoadings";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ZeroSubspaceVariance: return "ZeroSubspaceVariance";
    case ErrorKind::EmptyLoadings: return "EmptyLoadings";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace grpca

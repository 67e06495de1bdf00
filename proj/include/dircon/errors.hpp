#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dircon {

enum class ErrorKind {
  kDimensionMismatch,
  kSampleOutsideControlSet,
  kDegenerateIncidence,
  kDegenerateGeometry,
  kDegenerateSpectrum,
  kEmptyRegion,
  kAmbiguousCut,
  kUnderflow,
  kReplayBudgetExceeded,
  kInvalidArgument,
  kParseError,
  kValidationError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSampleOutsideControlSet: return "SampleOutsideControlSet";
    case ErrorKind::kDegenerateIncidence: return "DegenerateIncidence";
    case ErrorKind::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::kDegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::kEmptyRegion: return "EmptyRegion";
    case ErrorKind::kAmbiguousCut: return "AmbiguousCut";
    case ErrorKind::kUnderflow: return "Underflow";
    case ErrorKind::kReplayBudgetExceeded: return "ReplayBudgetExceeded";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace dircon

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flownav {

// Every failure the library reports. The grouping matters to the CLI, which
// maps each kind onto an exit code through error_category().
enum class ErrorKind {
  // imaging
  BadMagic,
  BadHeader,
  Truncated,
  InvalidImage,
  ZeroLevels,
  // flow
  PatternOutOfBounds,
  DimensionMismatch,
  // features
  NegativeDistance,
  EmptyTraining,
  RaggedRow,
  BadLabel,
  // learn
  LengthMismatch,
  SingleClass,
  NonPositiveHyperparameter,
  MissingDistance,
  BadVersion,
  CorruptSection,
  NonConvergence,
  // eval
  TooFewSamples,
  TooFewPerClass,
  TooFewFrames,
  // io / usage
  Io,
  InvalidArgument,
};

enum class ErrorCategory { Usage, Data, Numeric };

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::BadHeader: return "BadHeader";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::InvalidImage: return "InvalidImage";
    case ErrorKind::ZeroLevels: return "ZeroLevels";
    case ErrorKind::PatternOutOfBounds: return "PatternOutOfBounds";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeDistance: return "NegativeDistance";
    case ErrorKind::EmptyTraining: return "EmptyTraining";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NonPositiveHyperparameter: return "NonPositiveHyperparameter";
    case ErrorKind::MissingDistance: return "MissingDistance";
    case ErrorKind::BadVersion: return "BadVersion";
    case ErrorKind::CorruptSection: return "CorruptSection";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::TooFewPerClass: return "TooFewPerClass";
    case ErrorKind::TooFewFrames: return "TooFewFrames";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

inline ErrorCategory error_category(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConvergence: return ErrorCategory::Numeric;
    case ErrorKind::InvalidArgument:
    case ErrorKind::ZeroLevels:
    case ErrorKind::NonPositiveHyperparameter: return ErrorCategory::Usage;
    default: return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flownav

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exrec {

enum class ErrorKind {
  // input data
  MalformedHeader,
  NonNumericCell,
  InvalidField,
  LayoutMismatch,
  DegenerateScale,
  EmptyTrainingSet,
  UnknownLabel,
  UnknownExercise,
  TooFewSamples,
  WindowTooShort,
  ShapeMismatch,
  FeatureConfigMismatch,
  // model files and training
  CorruptModelFile,
  UnsupportedVersion,
  NoModelLoaded,
  DivergedLoss,
  // io
  SourceFailure,
  SinkFailure,
  // command line
  Usage,
  Internal,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::InvalidField: return "InvalidField";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::UnknownExercise: return "UnknownExercise";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::FeatureConfigMismatch: return "FeatureConfigMismatch";
    case ErrorKind::CorruptModelFile: return "CorruptModelFile";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::NoModelLoaded: return "NoModelLoaded";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::SourceFailure: return "SourceFailure";
    case ErrorKind::SinkFailure: return "SinkFailure";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Internal: return "Internal";
  }
  return "Internal";
}

/// Process exit status for an error: 2 usage, 3 input, 4 model, 5 internal.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return 2;
    case ErrorKind::CorruptModelFile:
    case ErrorKind::UnsupportedVersion:
    case ErrorKind::NoModelLoaded:
    case ErrorKind::DivergedLoss:
    case ErrorKind::FeatureConfigMismatch:
      return 4;
    case ErrorKind::Internal:
      return 5;
    default:
      return 3;
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

}  // namespace exrec

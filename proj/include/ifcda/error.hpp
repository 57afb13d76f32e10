#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ifcda {

enum class ErrorKind {
  kFormat,       // malformed file contents
  kData,         // non-finite values, shape mismatches
  kLabel,        // label outside the admissible range
  kParameter,    // invalid hyperparameter
  kPropagation,  // singular label-propagation system
  kNormalization,
  kPrecondition,
  kDegenerate,   // zero-mass weights, empty losses
  kSolver,
  kConfig,
  kFile,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

  /// Same kind, message prefixed with `context` (e.g. "iteration 3").
  Error with_context(const std::string& context) const {
    return Error(kind_, context + ": " + message_);
  }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kData: return "data";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kPropagation: return "propagation";
    case ErrorKind::kNormalization: return "normalization";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kSolver: return "solver";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kFile: return "file";
  }
  return "unknown";
}

}  // namespace ifcda

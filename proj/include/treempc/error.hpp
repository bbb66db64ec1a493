#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treempc {

enum class ErrorCode {
  kCycleDetected,
  kSelfLoop,
  kDuplicateEdge,
  kNodeOutOfRange,
  kNotANeighbor,
  kDisconnected,
  kSameNode,
  kInvalidConfig,
  kCapacityExceeded,
  kNonTermination,
  kUnanswerableTarget,
  kDomainMismatch,
  kEmptySubset,
  kIncompleteDecomposition,
  kDegreeViolation,
  kStrictnessViolation,
  kPathTooLong,
  kImproperColoring,
  kSizeLimit,
  kParseError,
  kFormatError,
  kIoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kSelfLoop: return "SelfLoop";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kNodeOutOfRange: return "NodeOutOfRange";
    case ErrorCode::kNotANeighbor: return "NotANeighbor";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kSameNode: return "SameNode";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kCapacityExceeded: return "CapacityExceeded";
    case ErrorCode::kNonTermination: return "NonTermination";
    case ErrorCode::kUnanswerableTarget: return "UnanswerableTarget";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kIncompleteDecomposition: return "IncompleteDecomposition";
    case ErrorCode::kDegreeViolation: return "DegreeViolation";
    case ErrorCode::kStrictnessViolation: return "StrictnessViolation";
    case ErrorCode::kPathTooLong: return "PathTooLong";
    case ErrorCode::kImproperColoring: return "ImproperColoring";
    case ErrorCode::kSizeLimit: return "SizeLimit";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code logic) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace treempc

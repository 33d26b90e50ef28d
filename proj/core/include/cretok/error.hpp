#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cretok {

enum class ErrorCode {
  kIo,
  kInvalidArgument,
  // corpus
  kMalformedRecord,
  kDuplicatePair,
  kEmptyConcept,
  kMissingPlaceholder,
  kNotEnoughPairs,
  // encoders
  kAlreadyInjected,
  kMarkerCollision,
  kInjectionUnsupported,
  kPromptOverflow,
  kEmptyPrompt,
  kBackendUnavailable,
  kCheckpointFormat,
  // optimizer
  kZeroNorm,
  kDimensionMismatch,
  kNonFiniteLoss,
  // evaluation
  kMissingCriterion,
  kOutOfRange,
  kUnparseable,
  kEmptyGroup,
  kScorerUnavailable,
  kUnreadableImage,
  // study
  kInvalidRanking,
  kDuplicateSubmission,
  kSessionClosed,
  kUnknownSession,
  kUnknownPair,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; `what()` holds the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cretok

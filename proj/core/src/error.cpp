#include "cretok/error.hpp"

namespace cretok {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicatePair: return "DuplicatePair";
    case ErrorCode::kEmptyConcept: return "EmptyConcept";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kNotEnoughPairs: return "NotEnoughPairs";
    case ErrorCode::kAlreadyInjected: return "AlreadyInjected";
    case ErrorCode::kMarkerCollision: return "MarkerCollision";
    case ErrorCode::kInjectionUnsupported: return "InjectionUnsupported";
    case ErrorCode::kPromptOverflow: return "PromptOverflow";
    case ErrorCode::kEmptyPrompt: return "EmptyPrompt";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kCheckpointFormat: return "CheckpointFormat";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kMissingCriterion: return "MissingCriterion";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kUnparseable: return "Unparseable";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::kUnreadableImage: return "UnreadableImage";
    case ErrorCode::kInvalidRanking: return "InvalidRanking";
    case ErrorCode::kDuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::kSessionClosed: return "SessionClosed";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kUnknownPair: return "UnknownPair";
  }
  return "Unknown";
}

}  // namespace cretok

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "cretok/error.hpp"

namespace cretok::eval {

struct JudgeScores {
  double integration = 0;
  double alignment = 0;
  double originality = 0;
  double aesthetics = 0;
  double comprehensive = 0;

  static constexpr std::array<std::string_view, 5> kNames{"integration", "alignment", "originality", "aesthetics",
                                                          "comprehensive"};
  std::array<double, 5> values() const { return {integration, alignment, originality, aesthetics, comprehensive}; }
};

/// Creativity rubric sent to the LLM judge, naming the two concepts.
/// Paragraphs are separated by one blank line. Throws kEmptyConcept.
std::string judge_prompt(std::string_view t1, std::string_view t2);

/// Reads the five scores from a judge reply. Each criterion is taken from
/// the first line that starts with its label (list numbering, bullets and
/// markdown emphasis are ignored) and carries a number; "(1-10)" range
/// hints are skipped. Throws kMissingCriterion, kUnparseable or kOutOfRange.
JudgeScores parse_judge(std::string_view response);

struct JudgeOutcome {
  std::optional<JudgeScores> scores;
  ErrorCode error = ErrorCode::kUnparseable;  // meaningful when !scores
  std::string message;
  std::string raw;
};

/// Never throws.
JudgeOutcome try_parse_judge(std::string_view response) noexcept;

/// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace cretok::eval

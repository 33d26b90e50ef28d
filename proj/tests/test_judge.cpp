#include <gtest/gtest.h>

#include "cretok/io.hpp"
#include "cretok/judge.hpp"
#include "support/expect_error.hpp"
#include "support/support.hpp"

namespace cretok::eval {
namespace {

TEST(JudgePrompt, MatchesReferenceText) {
  const auto expected = io::read_file(testing::test_data_dir() / "judge_prompt_banana_gorilla.txt");
  EXPECT_EQ(normalize_whitespace(judge_prompt("banana", "gorilla")), normalize_whitespace(expected));
}

TEST(JudgePrompt, NamesBothConceptsAndHasSixParagraphs) {
  const auto p = judge_prompt("lettuce", "mantis");
  EXPECT_NE(p.find("a mixture of a lettuce and a mantis"), std::string::npos);
  std::size_t breaks = 0;
  for (std::size_t pos = p.find("\n\n"); pos != std::string::npos; pos = p.find("\n\n", pos + 2)) ++breaks;
  EXPECT_EQ(breaks, 5u);
  EXPECT_CRETOK_ERROR(judge_prompt("", "mantis"), ErrorCode::kEmptyConcept);
}

TEST(NormalizeWhitespace, CollapsesRuns) {
  EXPECT_EQ(normalize_whitespace("  a\n\n b\t c  "), "a b c");
}

TEST(ParseJudge, PlainNumberedReply) {
  const auto s = parse_judge(
      "1. Conceptual Integration (1-10): 8\n"
      "2. Alignment with Prompt (1-10): 7\n"
      "3. Originality (1-10): 9\n"
      "4. Aesthetic Quality (1-10): 6.5\n"
      "Comprehensive creative assessment: 7.5 - the hybrid reads as one creature.\n");
  EXPECT_EQ(s.integration, 8);
  EXPECT_EQ(s.alignment, 7);
  EXPECT_EQ(s.originality, 9);
  EXPECT_EQ(s.aesthetics, 6.5);
  EXPECT_EQ(s.comprehensive, 7.5);
}

TEST(ParseJudge, MarkdownAndFractions) {
  const auto s = parse_judge(
      "**Conceptual Integration:** 9/10\n"
      "- **Alignment with Prompt**: 8/10\n"
      "### Originality: 7\n"
      "* Aesthetic Quality - 10\n"
      "**Comprehensive Assessment (1-10):** 8\n");
  EXPECT_EQ(s.values(), (std::array<double, 5>{9, 8, 7, 10, 8}));
}

TEST(ParseJudge, Errors) {
  EXPECT_CRETOK_ERROR(parse_judge("Conceptual Integration: 8\nAlignment with Prompt: 7\n"),
                      ErrorCode::kMissingCriterion);
  EXPECT_CRETOK_ERROR(parse_judge("Conceptual Integration: 11\nAlignment with Prompt: 7\nOriginality: 7\n"
                                  "Aesthetic Quality: 7\nComprehensive: 7\n"),
                      ErrorCode::kOutOfRange);
  EXPECT_CRETOK_ERROR(parse_judge("Conceptual Integration: high\nAlignment with Prompt: 7\nOriginality: 7\n"
                                  "Aesthetic Quality: 7\nComprehensive: 7\n"),
                      ErrorCode::kUnparseable);
}

TEST(ParseJudge, TryParseNeverThrows) {
  const auto bad = try_parse_judge("I cannot rate this image.");
  EXPECT_FALSE(bad.scores);
  EXPECT_EQ(bad.error, ErrorCode::kMissingCriterion);
  EXPECT_EQ(bad.raw, "I cannot rate this image.");
  const auto good = try_parse_judge(
      "Integration: 5\nAlignment: 5\nOriginality: 5\nAesthetics: 5\nComprehensive: 5\n");
  ASSERT_TRUE(good.scores);
  EXPECT_EQ(good.scores->comprehensive, 5);
}

}  // namespace
}  // namespace cretok::eval

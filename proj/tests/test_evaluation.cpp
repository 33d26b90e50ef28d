#include <gtest/gtest.h>

#include <cmath>

#include "cretok/evaluation.hpp"
#include "cretok/io.hpp"
#include "cretok/png.hpp"
#include "support/expect_error.hpp"
#include "support/support.hpp"

namespace cretok::eval {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> some_png(std::uint8_t shade) { return png::encode(png::solid(4, 4, shade, 0, 0)); }

ScoreInput input_for(const std::vector<std::uint8_t>& bytes) {
  return {"img", "A photo of a <CreTok> mixture.", "banana", "gorilla", bytes};
}

TEST(StubScorer, FixedAndDerivedValues) {
  const auto a = some_png(1), b = some_png(2);
  StubScorer fixed("VQAScore", ScorerKind::kAlignment, 0.25);
  EXPECT_EQ(fixed.score(input_for(a)).value, 0.25);
  StubScorer vqa("VQAScore", ScorerKind::kAlignment);
  const auto v = *vqa.score(input_for(a)).value;
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
  EXPECT_EQ(v, *vqa.score(input_for(a)).value);
  EXPECT_NE(v, *vqa.score(input_for(b)).value);
  StubScorer judge("judge", ScorerKind::kJudge);
  const auto j = judge.score(input_for(a));
  ASSERT_TRUE(j.judge);
  for (double x : j.judge->values()) {
    EXPECT_GE(x, 1.0);
    EXPECT_LE(x, 10.0);
  }
  EXPECT_FALSE(j.raw.empty());
}

TEST(ScorerKind, Names) {
  for (auto k : {ScorerKind::kAlignment, ScorerKind::kPreferencePick, ScorerKind::kPreferenceReward, ScorerKind::kJudge})
    EXPECT_EQ(parse_scorer_kind(to_string(k)), k);
  EXPECT_ANY_THROW((void)parse_scorer_kind("psychic"));
}

TEST(ScorerConfig, StubsAndJudgeWithoutKey) {
  const auto scorers = load_scorer_config(testing::data_dir() / "scorers_stub.json");
  EXPECT_GE(scorers.size(), 4u);
  ::unsetenv("CRETOK_TEST_NO_SUCH_KEY");
  EXPECT_CRETOK_ERROR(parse_scorer_config(R"({"scorers":[{"type":"judge","api_key_env":"CRETOK_TEST_NO_SUCH_KEY"}]})"),
                      ErrorCode::kScorerUnavailable);
}

TEST(HttpScorer, UnreachableServiceFailsAfterRetries) {
  HttpScorerConfig cfg;
  cfg.name = "PickScore";
  cfg.kind = ScorerKind::kPreferencePick;
  cfg.url = "http://127.0.0.1:9/score";
  cfg.timeout_seconds = 1;
  cfg.retry = {2, std::chrono::milliseconds(1)};
  HttpScorer scorer(cfg);
  const auto png = some_png(3);
  EXPECT_CRETOK_ERROR((void)scorer.score(input_for(png)), ErrorCode::kScorerUnavailable);
}

TEST(ResponseCache, KeyedByScorerIdentity) {
  const auto dir = testing::scratch_dir("cache");
  ResponseCache cache(dir);
  const auto png = some_png(5);
  StubScorer a("VQAScore", ScorerKind::kAlignment), b("Other", ScorerKind::kAlignment);
  const auto ka = ResponseCache::key(input_for(png), a);
  EXPECT_NE(ka, ResponseCache::key(input_for(png), b));
  EXPECT_FALSE(cache.get(ka));
  ScoreValue v;
  v.value = 0.75;
  cache.put(ka, v);
  EXPECT_EQ(cache.get(ka)->value, 0.75);
}

TEST(Records, RoundTripIncludingJudgeAndFailures) {
  std::vector<ScoreRecord> recs(3);
  recs[0] = {"a.png", "CreTok", "p, with comma", "VQAScore", ScorerKind::kAlignment, true, 0.5, std::nullopt, ""};
  recs[1] = {"a.png", "CreTok", "p", "judge", ScorerKind::kJudge, true, std::nullopt, JudgeScores{8, 7, 9, 6, 7.5}, ""};
  recs[2] = {"b.png", "CreTok", "p", "PickScore", ScorerKind::kPreferencePick, false, std::nullopt, std::nullopt,
             "UnreadableImage: bad"};
  const auto text = serialize_records(recs);
  EXPECT_EQ(text.substr(0, kRecordsHeader.size()), kRecordsHeader);
  const auto back = parse_records(text);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].prompt, "p, with comma");
  EXPECT_EQ(back[1].judge->comprehensive, 7.5);
  EXPECT_FALSE(back[2].ok);
  EXPECT_EQ(back[2].reason, "UnreadableImage: bad");
}

TEST(ScoreImages, UnreadableImageBecomesFailedRecord) {
  const auto dir = testing::scratch_dir("score");
  const auto good = some_png(9);
  io::write_file_atomic(dir / "good.png", std::string(good.begin(), good.end()));
  io::write_file_atomic(dir / "bad.png", "garbage");
  std::vector<generation::ManifestRow> rows{{"banana", "gorilla", "p1", 0, "ck", "stub", "good.png", 1},
                                            {"bee", "lemon", "p2", 1, "ck", "stub", "bad.png", 1},
                                            {"cat", "dog", "p3", 2, "ck", "stub", "missing.png", 1}};
  const auto scorers = default_stub_scorers();
  std::vector<const Scorer*> ptrs;
  for (const auto& s : scorers) ptrs.push_back(s.get());
  ScoreOptions opt;
  opt.workers = 2;
  const auto recs = score_images(rows, dir, ptrs, opt);
  ASSERT_EQ(recs.size(), 3 * scorers.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].ok, i < scorers.size()) << i;
    EXPECT_EQ(recs[i].image_id, rows[i / scorers.size()].image_path);
  }
}

TEST(ScoreImages, AlignmentOutsideUnitIntervalIsRejected) {
  const auto dir = testing::scratch_dir("score_range");
  const auto good = some_png(9);
  io::write_file_atomic(dir / "good.png", std::string(good.begin(), good.end()));
  std::vector<generation::ManifestRow> rows{{"banana", "gorilla", "p1", 0, "ck", "stub", "good.png", 1}};
  StubScorer bad("VQAScore", ScorerKind::kAlignment, 1.5);
  const std::vector<const Scorer*> ptrs{&bad};
  const auto recs = score_images(rows, dir, ptrs);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_FALSE(recs[0].ok);
}

TEST(MeanStd, PopulationConvention) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_std(v);
  EXPECT_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.std, std::sqrt(1.25), 1e-15);
  EXPECT_EQ(m.n, 4u);
  EXPECT_EQ(m.format(3), "2.500±1.118");
  EXPECT_CRETOK_ERROR((void)mean_std(std::vector<double>{}), ErrorCode::kEmptyGroup);
}

TEST(Aggregate, GroupsByMethodAndMetric) {
  std::vector<ScoreRecord> recs;
  for (double v : {0.2, 0.4}) recs.push_back({"x", "CreTok", "p", "VQAScore", ScorerKind::kAlignment, true, v, {}, ""});
  recs.push_back({"x", "CreTok", "p", "VQAScore", ScorerKind::kAlignment, false, {}, {}, "boom"});
  recs.push_back({"x", "SD3", "p", "VQAScore", ScorerKind::kAlignment, true, 0.9, {}, ""});
  recs.push_back({"x", "SD3", "p", "judge", ScorerKind::kJudge, true, {}, JudgeScores{1, 2, 3, 4, 5}, ""});
  const auto aggs = aggregate_scores(recs);
  std::map<std::pair<std::string, std::string>, MeanStd> by;
  for (const auto& a : aggs) by[{a.method, a.metric}] = a.stats;
  EXPECT_NEAR(by.at({"CreTok", "VQAScore"}).mean, 0.3, 1e-15);
  EXPECT_EQ(by.at({"CreTok", "VQAScore"}).n, 2u);
  EXPECT_EQ(by.at({"SD3", "originality"}).mean, 3);
  EXPECT_EQ(by.at({"SD3", "comprehensive"}).mean, 5);

  std::vector<ScoreRecord> failed{{"x", "BASS", "p", "VQAScore", ScorerKind::kAlignment, false, {}, {}, "boom"}};
  EXPECT_CRETOK_ERROR((void)aggregate_scores(failed), ErrorCode::kEmptyGroup);
}

TEST(Methods, TableOrder) {
  EXPECT_EQ(order_methods({"zeta", "CreTok", "SD3", "alpha", "Kand3"}),
            (std::vector<std::string>{"SD3", "Kand3", "CreTok", "alpha", "zeta"}));
}

RankingRecord ranking(std::string who, std::string a, std::string b, std::map<std::string, int> r) {
  return {std::move(who), std::move(a), std::move(b), std::move(r)};
}

TEST(Rankings, ValidationRequiresPermutation) {
  EXPECT_NO_THROW(ranking("p", "a", "b", {{"X", 2}, {"Y", 1}}).validate());
  EXPECT_CRETOK_ERROR(ranking("p", "a", "b", {{"X", 1}, {"Y", 1}}).validate(), ErrorCode::kInvalidRanking);
  EXPECT_CRETOK_ERROR(ranking("p", "a", "b", {{"X", 0}, {"Y", 1}}).validate(), ErrorCode::kInvalidRanking);
  EXPECT_CRETOK_ERROR(ranking("p", "a", "b", {{"X", 1}, {"Y", 3}}).validate(), ErrorCode::kInvalidRanking);
}

TEST(Rankings, LongFormatRoundTrip) {
  std::vector<RankingRecord> recs{ranking("p1", "banana", "gorilla", {{"SD3", 2}, {"CreTok", 1}, {"BASS", 3}}),
                                  ranking("p2", "banana", "gorilla", {{"SD3", 1}, {"CreTok", 3}, {"BASS", 2}})};
  const auto text = serialize_rankings(recs);
  EXPECT_EQ(text.substr(0, text.find('\n')), kRankingHeader);
  EXPECT_NE(text.find("p1,banana,gorilla,CreTok,1\np1,banana,gorilla,SD3,2\n"), std::string::npos);
  const auto back = parse_rankings(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].ranks, recs[1].ranks);
  EXPECT_CRETOK_ERROR(parse_rankings(std::string(kRankingHeader) + "\np,a,b,X,1\np,a,b,Y,1\n"),
                      ErrorCode::kInvalidRanking);
}

TEST(Rankings, AggregatePerPairAndOverall) {
  std::vector<RankingRecord> recs{ranking("p1", "a", "b", {{"X", 1}, {"Y", 2}}),
                                  ranking("p2", "a", "b", {{"X", 2}, {"Y", 1}}),
                                  ranking("p1", "c", "d", {{"X", 1}, {"Y", 2}})};
  const auto s = aggregate_rankings(recs);
  ASSERT_EQ(s.per_pair.size(), 2u);
  EXPECT_EQ(s.per_pair[0].responses, 2u);
  EXPECT_EQ(s.per_pair[0].mean_rank.at("X"), 1.5);
  EXPECT_EQ(s.per_pair[1].mean_rank.at("X"), 1.0);
  EXPECT_NEAR(s.overall.at("X").mean, 4.0 / 3.0, 1e-15);
  EXPECT_EQ(s.records, 3u);
  recs.push_back(ranking("p3", "a", "b", {{"X", 1}, {"Z", 2}}));
  EXPECT_CRETOK_ERROR((void)aggregate_rankings(recs), ErrorCode::kInvalidRanking);
}

}  // namespace
}  // namespace cretok::eval

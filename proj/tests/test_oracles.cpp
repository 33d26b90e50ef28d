#include <gtest/gtest.h>

#include <cmath>

#include "cretok/corpus.hpp"
#include "cretok/objective.hpp"
#include "support/support.hpp"

namespace cretok {
namespace {

// Values printed by tests/oracles/toy_pair_loss.py.
constexpr double kLettuceMantisUnclamped = 0.86370719552538877;
constexpr double kBananaGorillaTheta03 = 1.1223330067061907;
constexpr double kInitialTrainMeanCos = 0.4023090671220057;

// Values printed by tests/oracles/rank_means.py.
constexpr double kCreTokMeanOfMeans = 2.4888888888888889;
constexpr double kSd3MeanOfMeans = 3.2748148148148148;

TEST(ToyOracle, PairLossMatchesIndependentImplementation) {
  auto set = testing::default_encoders();
  auto token = set.inject("<CreTok>");
  const auto pool = corpus::TemplatePool::defaults();
  optim::Objective unclamped(set, pool, {1.0});
  optim::Objective clamped(set, pool, {0.3});
  EXPECT_NEAR(unclamped.pair_loss(corpus::TextPair::make("lettuce", "mantis"), token).loss,
              kLettuceMantisUnclamped, 1e-12);
  EXPECT_NEAR(clamped.pair_loss(corpus::TextPair::make("banana", "gorilla"), token).loss, kBananaGorillaTheta03,
              1e-12);
}

TEST(ToyOracle, InitialMeanCosineOverTrainingSet) {
  auto set = testing::default_encoders();
  auto token = set.inject("<CreTok>");
  const auto pool = corpus::TemplatePool::defaults();
  optim::Objective obj(set, pool, {});
  const auto ds = corpus::load_cangjie(testing::data_dir() / "cangjie_train.csv");
  EXPECT_NEAR(obj.mean_cosine(ds.pairs, token), kInitialTrainMeanCos, 1e-12);
}

TEST(RankOracle, ReferenceRowsSumToFifteen) {
  const auto ref = testing::load_reference_ranks(testing::data_dir() / "reference" / "user_study_per_pair.csv");
  ASSERT_EQ(ref.per_pair.size(), 27u);
  EXPECT_EQ(ref.methods, eval::kTableMethods);
  for (const auto& row : ref.per_pair) {
    double sum = 0;
    for (const auto& [m, v] : row) sum += v;
    EXPECT_NEAR(sum, 15.0, 0.02);
  }
}

TEST(RankOracle, SynthesizedRecordsReproduceReferenceMeans) {
  const auto ref = testing::load_reference_ranks(testing::data_dir() / "reference" / "user_study_per_pair.csv");
  const auto records = testing::synthesize_rankings(ref, 50, 2024);
  ASSERT_EQ(records.size(), 27u * 50u);
  for (const auto& r : records) ASSERT_NO_THROW(r.validate());
  const auto summary = eval::aggregate_rankings(records);
  ASSERT_EQ(summary.per_pair.size(), 27u);
  for (std::size_t i = 0; i < 27; ++i) {
    EXPECT_EQ(summary.per_pair[i].responses, 50u);
    for (const auto& m : ref.methods)
      EXPECT_NEAR(summary.per_pair[i].mean_rank.at(m), ref.per_pair[i].at(m), 1e-9) << "pair " << i + 1 << " " << m;
  }
  // Equal responses per pair: the overall mean is the mean of the per-pair means.
  EXPECT_NEAR(summary.overall.at("CreTok").mean, kCreTokMeanOfMeans, 1e-9);
  EXPECT_NEAR(summary.overall.at("SD3").mean, kSd3MeanOfMeans, 1e-9);
  EXPECT_NEAR(summary.overall.at("CreTok").mean, 2.49, 0.005);
}

TEST(RankOracle, SynthesisIsSeedIndependentInMeans) {
  const auto ref = testing::load_reference_ranks(testing::data_dir() / "reference" / "user_study_per_pair.csv");
  const auto a = eval::aggregate_rankings(testing::synthesize_rankings(ref, 50, 1));
  const auto b = eval::aggregate_rankings(testing::synthesize_rankings(ref, 50, 2));
  for (const auto& m : ref.methods) EXPECT_NEAR(a.overall.at(m).mean, b.overall.at(m).mean, 1e-12);
}

}  // namespace
}  // namespace cretok

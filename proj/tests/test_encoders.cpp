#include <gtest/gtest.h>

#include <cmath>

#include "cretok/backend_config.hpp"
#include "cretok/checkpoint.hpp"
#include "cretok/encoders.hpp"
#include "cretok/toy_encoder.hpp"
#include "support/expect_error.hpp"
#include "support/support.hpp"

namespace cretok::encoders {
namespace {

ToyEncoderConfig small(std::string name, std::uint64_t seed, bool injectable = true) {
  ToyEncoderConfig c;
  c.name = std::move(name);
  c.embed_dim = 6;
  c.pooled_dim = 4;
  c.seed = seed;
  c.injectable = injectable;
  return c;
}

TEST(ToyEncoder, TokenizesWordsAndPunctuation) {
  ToyEncoder enc(small("t", 1));
  const auto tokens = enc.tokenize("A photo, of a Polar-bear.");
  std::vector<std::string> text;
  for (const auto& t : tokens) text.push_back(t.text);
  EXPECT_EQ(text, (std::vector<std::string>{"a", "photo", ",", "of", "a", "polar-bear", "."}));
}

TEST(ToyEncoder, MarkerBecomesOneToken) {
  ToyEncoder enc(small("t", 1));
  EXPECT_GT(enc.tokenize("<CreTok>").size(), 1u);
  enc.inject("<CreTok>", {});
  const auto tokens = enc.tokenize("a <CreTok>mixture.");
  ASSERT_EQ(tokens.size(), 4u);
  EXPECT_TRUE(tokens[1].is_marker);
  EXPECT_EQ(tokens[2].text, "mixture");
}

TEST(ToyEncoder, InjectionErrors) {
  ToyEncoder enc(small("t", 1));
  EXPECT_CRETOK_ERROR(enc.inject("cat", {}), ErrorCode::kMarkerCollision);
  enc.inject("<CreTok>", {});
  EXPECT_CRETOK_ERROR(enc.inject("<Other>", {}), ErrorCode::kAlreadyInjected);
  ToyEncoder frozen(small("t5", 2, false));
  EXPECT_CRETOK_ERROR(frozen.inject("<CreTok>", {}), ErrorCode::kInjectionUnsupported);
}

TEST(ToyEncoder, SeedWordInitCopiesEmbedding) {
  ToyEncoder enc(small("t", 3));
  const auto injected = enc.inject("<CreTok>", {});
  EXPECT_EQ(injected.initial, enc.token_embedding("creative"));
  const auto p1 = enc.pooled("a <CreTok> mixture.", injected.initial);
  ToyEncoder plain(small("t", 3));
  const auto p2 = plain.pooled("a creative mixture.", {});
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_NEAR(p1[i], p2[i], 1e-14);
}

TEST(ToyEncoder, GaussianInitDependsOnSeed) {
  ToyEncoder a(small("t", 3)), b(small("t", 3)), c(small("t", 3));
  TokenInit g1{InitPolicy::kGaussian, "creative", 1};
  TokenInit g2{InitPolicy::kGaussian, "creative", 2};
  const auto x = a.inject("<CreTok>", g1).initial;
  EXPECT_EQ(x, b.inject("<CreTok>", g1).initial);
  EXPECT_NE(x, c.inject("<CreTok>", g2).initial);
}

TEST(ToyEncoder, PromptLimits) {
  ToyEncoderConfig cfg = small("t", 1);
  cfg.max_length = 5;
  ToyEncoder enc(cfg);
  EXPECT_NO_THROW((void)enc.pooled("a b c", {}));
  EXPECT_CRETOK_ERROR((void)enc.pooled("a b c d", {}), ErrorCode::kPromptOverflow);
  EXPECT_CRETOK_ERROR((void)enc.pooled("   ", {}), ErrorCode::kEmptyPrompt);
}

TEST(ToyEncoder, VjpMatchesFiniteDifferences) {
  Rng rng(17);
  ToyEncoderConfig cfg = small("t", 5);
  cfg.bias_scale = 0.2;
  ToyEncoder enc(cfg);
  auto token = enc.inject("<CreTok>", {}).initial;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> up(4);
    for (auto& u : up) u = rng.normal();
    const std::string prompt = trial % 2 ? "a <CreTok> mixture of <CreTok>." : "a photo of a <CreTok> mixture.";
    const auto analytic = enc.pooled_vjp(prompt, token, up);
    const auto numeric = testing::numeric_gradient(
        [&](const std::vector<double>& t) {
          const auto p = enc.pooled(prompt, t);
          double s = 0;
          for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * up[i];
          return s;
        },
        token, 1e-6);
    for (std::size_t i = 0; i < token.size(); ++i) EXPECT_NEAR(analytic[i], numeric[i], 1e-7);
  }
  EXPECT_EQ(testing::norm(enc.pooled_vjp("a cat.", token, std::vector<double>(4, 1.0))), 0.0);
}

TEST(ToyEncoder, ChecksumTracksWeights) {
  ToyEncoder a(small("t", 1)), b(small("t", 1)), c(small("t", 2));
  EXPECT_EQ(a.frozen_checksum(), b.frozen_checksum());
  EXPECT_NE(a.frozen_checksum(), c.frozen_checksum());
  const auto before = a.frozen_checksum();
  a.inject("<CreTok>", {});
  EXPECT_EQ(a.frozen_checksum(), before);
}

TEST(EncoderSet, InjectsOnlyInjectableBackends) {
  EncoderSet set;
  set.add(std::make_unique<ToyEncoder>(small("clip-l", 1)));
  set.add(std::make_unique<ToyEncoder>(small("clip-g", 2)));
  set.add(std::make_unique<ToyEncoder>(small("t5", 3, false)));
  EXPECT_CRETOK_ERROR(set.add(std::make_unique<ToyEncoder>(small("t5", 4))), ErrorCode::kInvalidArgument);
  const auto token = set.inject("<CreTok>");
  ASSERT_EQ(token.vectors.size(), 2u);
  EXPECT_EQ(token.vectors[0].backend, "clip-l");
  EXPECT_EQ(set.trainable().size(), 2u);

  const auto cond = conditioning("a <CreTok> mixture.", &token, set);
  EXPECT_EQ(cond.backends, (std::vector<std::string>{"clip-l", "clip-g", "t5"}));
  EXPECT_EQ(cond.concatenated.size(), 12u);
  // The frozen backend sees the seed word in place of the marker.
  EXPECT_EQ(cond.pooled[2], set.at(2).pooled("a creative mixture.", {}));
  EXPECT_NE(cond.pooled[0], set.at(0).pooled("a <CreTok> mixture.", std::vector<double>(6, 0.0)));
}

TEST(EncoderSet, NoInjectableBackend) {
  EncoderSet set;
  set.add(std::make_unique<ToyEncoder>(small("t5", 3, false)));
  EXPECT_CRETOK_ERROR(set.inject("<CreTok>"), ErrorCode::kInjectionUnsupported);
}

TEST(EncoderSet, DimensionMismatchIsRejected) {
  auto set = testing::default_encoders();
  auto token = set.inject("<CreTok>");
  token.vectors[0].values.pop_back();
  EXPECT_CRETOK_ERROR(conditioning("a <CreTok>.", &token, set), ErrorCode::kDimensionMismatch);
  EXPECT_CRETOK_ERROR(checkpoint::check_compatible(token, set), ErrorCode::kDimensionMismatch);
}

TEST(BackendConfig, BundledToyConfigMatchesDefault) {
  const auto a = load_encoder_config(testing::data_dir() / "encoders.json");
  const auto b = default_toy_encoders();
  EXPECT_EQ(a.frozen_checksum(), b.frozen_checksum());
  EXPECT_EQ(a.seed_word(), "creative");
}

TEST(BackendConfig, RejectsUnknownType) {
  EXPECT_ANY_THROW(parse_encoder_config(R"({"encoders":[{"type":"magic","name":"x"}]})"));
}

TEST(Substitute, ReplacesEveryOccurrence) {
  EXPECT_EQ(substitute_marker("<m> and <m>", "<m>", "x<m>"), "x<m> and x<m>");
}

}  // namespace
}  // namespace cretok::encoders

#include "cretok/toy_encoder.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

#include "cretok/error.hpp"
#include "cretok/io.hpp"
#include "cretok/rng.hpp"

namespace cretok::encoders {

namespace {

constexpr std::uint64_t kMarkerId = 0xffffffffffffffffULL;
constexpr std::uint64_t kWeightSalt = 0x70726f6a65637421ULL;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || c == '-' || u >= 0x80;
}

}  // namespace

ToyEncoder::ToyEncoder(ToyEncoderConfig config) : config_(std::move(config)) {
  if (config_.embed_dim == 0 || config_.pooled_dim == 0)
    throw Error(ErrorCode::kInvalidArgument, "toy encoder dimensions must be positive");
  if (config_.max_length < 3) throw Error(ErrorCode::kInvalidArgument, "toy encoder max_length must be >= 3");
  info_.name = config_.name;
  info_.kind = "toy";
  info_.vocab_size = std::nullopt;
  info_.embed_dim = config_.embed_dim;
  info_.pooled_dim = config_.pooled_dim;
  info_.max_length = config_.max_length;
  info_.injectable = config_.injectable;

  GaussianStream stream(config_.seed ^ kWeightSalt);
  const double w_scale = config_.gain / std::sqrt(static_cast<double>(config_.embed_dim));
  weights_.resize(config_.pooled_dim * config_.embed_dim);
  for (double& w : weights_) w = stream.next() * w_scale;
  bias_.resize(config_.pooled_dim);
  for (double& b : bias_) b = stream.next() * config_.bias_scale;
}

std::vector<Token> ToyEncoder::tokenize(std::string_view prompt) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < prompt.size()) {
    if (marker_ && prompt.compare(i, marker_->size(), *marker_) == 0) {
      out.push_back({*marker_, kMarkerId, true});
      i += marker_->size();
      continue;
    }
    const char c = prompt[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::string text;
    if (is_word_char(c)) {
      while (i < prompt.size() && is_word_char(prompt[i]) &&
             !(marker_ && prompt.compare(i, marker_->size(), *marker_) == 0)) {
        text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(prompt[i]))));
        ++i;
      }
    } else {
      text.push_back(c);
      ++i;
    }
    const std::uint64_t id = fnv1a64(text);
    out.push_back({std::move(text), id, false});
  }
  return out;
}

std::vector<double> ToyEncoder::token_embedding(std::string_view text) const {
  GaussianStream stream(fnv1a64(text) ^ (config_.seed * kGolden));
  std::vector<double> e(config_.embed_dim);
  for (double& x : e) x = stream.next() * config_.embedding_scale;
  return e;
}

InjectedToken ToyEncoder::inject(std::string_view marker, const TokenInit& init) {
  if (!config_.injectable)
    throw Error(ErrorCode::kInjectionUnsupported, "backend '" + info_.name + "' rejects vocabulary extension");
  if (marker_) {
    throw Error(ErrorCode::kAlreadyInjected,
                "backend '" + info_.name + "' already hosts marker '" + *marker_ + "'");
  }
  if (marker.empty()) throw Error(ErrorCode::kInvalidArgument, "empty marker");
  const auto existing = tokenize(marker);
  if (existing.size() == 1) {
    throw Error(ErrorCode::kMarkerCollision,
                "marker '" + std::string(marker) + "' is already a single token in '" + info_.name + "'");
  }

  InjectedToken out;
  out.id = kMarkerId;
  if (init.policy == InitPolicy::kSeedWord) {
    const auto seed_tokens = tokenize(init.seed_word);
    if (seed_tokens.size() != 1)
      throw Error(ErrorCode::kInvalidArgument, "seed word '" + init.seed_word + "' is not a single token");
    out.initial = token_embedding(seed_tokens.front().text);
  } else {
    // Match the typical norm of vocabulary embeddings.
    static constexpr std::string_view kProbe[] = {"a", "photo", "of", "creative", "mixture",
                                                  "the", "and", "image", "cat", "dog"};
    double mean_norm = 0.0;
    for (auto w : kProbe) {
      double sq = 0.0;
      for (double x : token_embedding(w)) sq += x * x;
      mean_norm += std::sqrt(sq);
    }
    mean_norm /= static_cast<double>(std::size(kProbe));
    const double sigma = mean_norm / std::sqrt(static_cast<double>(config_.embed_dim));
    Rng rng(init.seed ^ fnv1a64(info_.name));
    out.initial.resize(config_.embed_dim);
    for (double& x : out.initial) x = rng.normal() * sigma;
  }
  marker_ = std::string(marker);
  return out;
}

ToyEncoder::Forward ToyEncoder::forward(std::string_view prompt, std::span<const double> token) const {
  const auto tokens = tokenize(prompt);
  if (tokens.empty()) throw Error(ErrorCode::kEmptyPrompt, "empty prompt for backend '" + info_.name + "'");
  if (tokens.size() + 2 > config_.max_length) {
    throw Error(ErrorCode::kPromptOverflow, "prompt needs " + std::to_string(tokens.size() + 2) +
                                                " tokens, '" + info_.name + "' holds " +
                                                std::to_string(config_.max_length));
  }
  const std::size_t d = config_.embed_dim;
  std::vector<double> mean(d, 0.0);
  Forward f;
  f.token_count = tokens.size();
  for (const auto& t : tokens) {
    if (t.is_marker) {
      ++f.marker_count;
      continue;
    }
    const auto e = token_embedding(t.text);
    for (std::size_t j = 0; j < d; ++j) mean[j] += e[j];
  }
  if (f.marker_count > 0) {
    if (token.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "marker vector has " + std::to_string(token.size()) +
                                                     " entries, '" + info_.name + "' expects " +
                                                     std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(f.marker_count) * token[j];
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (double& x : mean) x *= inv_n;

  f.out.resize(config_.pooled_dim);
  for (std::size_t i = 0; i < config_.pooled_dim; ++i) {
    const double* row = &weights_[i * d];
    double h = bias_[i];
    for (std::size_t j = 0; j < d; ++j) h += row[j] * mean[j];
    f.out[i] = std::tanh(h);
  }
  return f;
}

std::vector<double> ToyEncoder::pooled(std::string_view prompt, std::span<const double> token) const {
  return forward(prompt, token).out;
}

std::vector<double> ToyEncoder::pooled_vjp(std::string_view prompt, std::span<const double> token,
                                           std::span<const double> upstream) const {
  if (upstream.size() != config_.pooled_dim)
    throw Error(ErrorCode::kDimensionMismatch, "upstream gradient size mismatch for '" + info_.name + "'");
  const Forward f = forward(prompt, token);
  const std::size_t d = config_.embed_dim;
  std::vector<double> grad(d, 0.0);
  if (f.marker_count == 0) return grad;
  const double scale = static_cast<double>(f.marker_count) / static_cast<double>(f.token_count);
  for (std::size_t i = 0; i < config_.pooled_dim; ++i) {
    const double dh = upstream[i] * (1.0 - f.out[i] * f.out[i]) * scale;
    const double* row = &weights_[i * d];
    for (std::size_t j = 0; j < d; ++j) grad[j] += row[j] * dh;
  }
  return grad;
}

std::string ToyEncoder::frozen_checksum() const {
  std::string bytes;
  auto append = [&bytes](const void* p, std::size_t n) {
    bytes.append(static_cast<const char*>(p), n);
  };
  append(&config_.seed, sizeof config_.seed);
  append(&config_.embedding_scale, sizeof config_.embedding_scale);
  append(&config_.max_length, sizeof config_.max_length);
  append(weights_.data(), weights_.size() * sizeof(double));
  append(bias_.data(), bias_.size() * sizeof(double));
  return io::sha256_hex(bytes);
}

}  // namespace cretok::encoders

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cretok/encoders.hpp"

namespace cretok::encoders {

struct ToyEncoderConfig {
  std::string name = "toy";
  std::size_t embed_dim = 64;
  std::size_t pooled_dim = 32;
  std::size_t max_length = 77;
  std::uint64_t seed = 1;
  double gain = 1.0;             // projection entries ~ N(0, gain^2 / embed_dim)
  double bias_scale = 0.0;       // bias entries ~ N(0, bias_scale^2)
  double embedding_scale = 1.0;  // token embedding entries ~ N(0, embedding_scale^2)
  bool injectable = true;
};

/// Deterministic weight-free encoder for tests and desk-scale runs.
///
///   tokens    lowercase words (runs of [a-z0-9'-]) and single punctuation
///             characters; the injected marker is matched verbatim first
///   embedding GaussianStream(fnv1a64(token) ^ (seed * 0x9e3779b97f4a7c15))
///   pooled    tanh(W * mean(embeddings) + b)
///
/// W and b are drawn from GaussianStream(seed ^ 0x70726f6a65637421),
/// row-major W first, then b.
class ToyEncoder final : public EncoderBackend {
 public:
  explicit ToyEncoder(ToyEncoderConfig config);

  const BackendInfo& info() const override { return info_; }
  std::vector<Token> tokenize(std::string_view prompt) const override;
  InjectedToken inject(std::string_view marker, const TokenInit& init) override;
  std::optional<std::string> injected_marker() const override { return marker_; }
  std::vector<double> pooled(std::string_view prompt, std::span<const double> token) const override;
  std::vector<double> pooled_vjp(std::string_view prompt, std::span<const double> token,
                                 std::span<const double> upstream) const override;
  std::string frozen_checksum() const override;

  /// Frozen input embedding of a vocabulary token.
  std::vector<double> token_embedding(std::string_view text) const;
  const ToyEncoderConfig& config() const { return config_; }

 private:
  struct Forward {
    std::vector<double> out;  // tanh(h)
    std::size_t marker_count = 0;
    std::size_t token_count = 0;
  };
  Forward forward(std::string_view prompt, std::span<const double> token) const;

  ToyEncoderConfig config_;
  BackendInfo info_;
  std::vector<double> weights_;  // pooled_dim x embed_dim, row-major
  std::vector<double> bias_;
  std::optional<std::string> marker_;
};

}  // namespace cretok::encoders

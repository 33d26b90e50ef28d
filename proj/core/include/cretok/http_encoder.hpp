#pragma once

#include <memory>
#include <optional>
#include <string>

#include "cretok/encoders.hpp"

namespace cretok::encoders {

struct HttpEncoderConfig {
  std::string name;
  std::string url;  // e.g. "http://127.0.0.1:8101"
  int timeout_seconds = 120;
};

/// Encoder served out of process (see tools/bridges/clip_encoder_server.py).
///
/// JSON over HTTP:
///   GET  /info      -> {name, embed_dim, pooled_dim, max_length, vocab_size, injectable, checksum}
///   POST /tokenize  {prompt}                   -> {tokens: [{text, id, is_marker}]}
///   POST /inject    {marker, init, seed_word, seed} -> {id, vector}
///   POST /pooled    {prompt, token}            -> {pooled}
///   POST /vjp       {prompt, token, upstream}  -> {grad}
/// Error responses carry {error, message}; `error` is an ErrorCode name.
class HttpEncoder final : public EncoderBackend {
 public:
  /// Fetches /info; throws kBackendUnavailable when the service is down.
  explicit HttpEncoder(HttpEncoderConfig config);
  ~HttpEncoder() override;

  const BackendInfo& info() const override { return info_; }
  std::vector<Token> tokenize(std::string_view prompt) const override;
  InjectedToken inject(std::string_view marker, const TokenInit& init) override;
  std::optional<std::string> injected_marker() const override { return marker_; }
  std::vector<double> pooled(std::string_view prompt, std::span<const double> token) const override;
  std::vector<double> pooled_vjp(std::string_view prompt, std::span<const double> token,
                                 std::span<const double> upstream) const override;
  std::string frozen_checksum() const override;

 private:
  struct Client;
  std::string post(const std::string& path, const std::string& body) const;

  HttpEncoderConfig config_;
  BackendInfo info_;
  std::string checksum_;
  std::optional<std::string> marker_;
  std::unique_ptr<Client> client_;
};

}  // namespace cretok::encoders

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cretok::encoders {

inline constexpr std::string_view kDefaultSeedWord = "creative";

struct BackendInfo {
  std::string name;
  std::string kind;                       // "toy", "http", ...
  std::optional<std::size_t> vocab_size;  // nullopt for open (hashed) vocabularies
  std::size_t embed_dim = 0;              // width of the input token embedding
  std::size_t pooled_dim = 0;
  std::size_t max_length = 77;            // includes start/end tokens
  bool injectable = true;                 // false for T5-class encoders
};

struct Token {
  std::string text;
  std::uint64_t id = 0;
  bool is_marker = false;
};

enum class InitPolicy { kSeedWord, kGaussian };

struct TokenInit {
  InitPolicy policy = InitPolicy::kSeedWord;
  std::string seed_word = std::string(kDefaultSeedWord);
  std::uint64_t seed = 0;  // Gaussian policy only
};

struct InjectedToken {
  std::uint64_t id = 0;
  std::vector<double> initial;
};

/// A frozen text encoder that can host one trainable marker token.
///
/// Everything except the injected vector is immutable after construction.
/// The injected vector itself is not stored in the backend: callers pass it
/// to `pooled` and `pooled_vjp`, which keeps backends safe for concurrent
/// readers while a single training driver owns the parameter.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual const BackendInfo& info() const = 0;

  virtual std::vector<Token> tokenize(std::string_view prompt) const = 0;

  /// Registers `marker` as a single new token. Throws kAlreadyInjected,
  /// kMarkerCollision or kInjectionUnsupported.
  virtual InjectedToken inject(std::string_view marker, const TokenInit& init) = 0;
  virtual std::optional<std::string> injected_marker() const = 0;

  /// Pooled embedding of `prompt`, with `token` (embed_dim values) as the
  /// marker's input embedding. `token` is ignored when the marker does not
  /// occur. Throws kPromptOverflow or kEmptyPrompt.
  virtual std::vector<double> pooled(std::string_view prompt, std::span<const double> token) const = 0;

  /// Vector-Jacobian product: d(upstream . pooled(prompt, token)) / d token.
  virtual std::vector<double> pooled_vjp(std::string_view prompt, std::span<const double> token,
                                         std::span<const double> upstream) const = 0;

  /// Digest over every frozen parameter.
  virtual std::string frozen_checksum() const = 0;
};

struct BackendVector {
  std::string backend;
  std::vector<double> values;
};

/// The learned marker: one input-embedding vector per injectable backend.
struct TokenEmbedding {
  std::string marker = "<CreTok>";
  std::int64_t step = 0;
  std::vector<BackendVector> vectors;

  /// Empty span when the backend has no vector.
  std::span<const double> vector_for(std::string_view backend) const;
  std::vector<double>* mutable_vector_for(std::string_view backend);
  bool all_finite() const;
  std::size_t total_size() const;
};

struct ConditioningVector {
  std::vector<std::string> backends;
  std::vector<std::vector<double>> pooled;  // registration order
  std::vector<double> concatenated;
};

/// Replaces every occurrence of `marker` with `replacement`.
std::string substitute_marker(std::string_view prompt, std::string_view marker,
                              std::string_view replacement);

/// Pooled embedding on one backend. Backends without an injected marker (or
/// without a vector in `token`) see the marker replaced by `seed_word`.
std::vector<double> pooled_embed(const EncoderBackend& backend, std::string_view prompt,
                                 const TokenEmbedding* token,
                                 std::string_view seed_word = kDefaultSeedWord);

/// Ordered registry of backends.
class EncoderSet {
 public:
  EncoderSet() = default;
  EncoderSet(EncoderSet&&) noexcept = default;
  EncoderSet& operator=(EncoderSet&&) noexcept = default;

  EncoderBackend& add(std::unique_ptr<EncoderBackend> backend);

  std::size_t size() const { return backends_.size(); }
  bool empty() const { return backends_.empty(); }
  EncoderBackend& at(std::size_t i) { return *backends_.at(i); }
  const EncoderBackend& at(std::size_t i) const { return *backends_.at(i); }
  const EncoderBackend* find(std::string_view name) const;

  /// Injects `marker` into every injectable backend, in registration order.
  TokenEmbedding inject(std::string_view marker, const TokenInit& init = {});

  /// Backends that take part in training (the injectable ones).
  std::vector<const EncoderBackend*> trainable() const;

  /// Digest over all backends' frozen parameters.
  std::string frozen_checksum() const;

  const std::string& seed_word() const { return seed_word_; }
  void set_seed_word(std::string word) { seed_word_ = std::move(word); }

 private:
  std::vector<std::unique_ptr<EncoderBackend>> backends_;
  std::string seed_word_ = std::string(kDefaultSeedWord);
};

/// Pooled vectors from `backends` in the given order plus their concatenation.
ConditioningVector conditioning(std::string_view prompt, const TokenEmbedding* token,
                                std::span<const EncoderBackend* const> backends,
                                std::string_view seed_word = kDefaultSeedWord);

/// Every backend in the set, registration order.
ConditioningVector conditioning(std::string_view prompt, const TokenEmbedding* token,
                                const EncoderSet& set);

}  // namespace cretok::encoders

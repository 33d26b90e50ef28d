#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cretok/corpus.hpp"
#include "cretok/encoders.hpp"

namespace cretok::generation {

struct ImageSize {
  std::uint32_t width = 512;
  std::uint32_t height = 512;
};

struct GenerationRequest {
  std::string prompt;
  /// Learned token; null renders the marker through the seed word.
  std::shared_ptr<const encoders::TokenEmbedding> checkpoint;
  std::string checkpoint_id = "none";
  std::uint64_t seed = 0;
  std::size_t count = 1;
  ImageSize size;
  /// Sampler settings (steps, guidance, ...) passed to the backend untouched.
  nlohmann::json sampler = nlohmann::json::object();

  void validate() const;
};

/// What to do with text encoders that cannot host the marker (T5-class).
enum class ThirdEncoderPolicy { kDrop, kSeedWord };
std::string_view to_string(ThirdEncoderPolicy policy);

struct Capabilities {
  bool has_third_encoder = false;
  bool can_drop_third_encoder = true;
  bool supports_seeding = true;
};

struct BackendDescriptor {
  std::string name;
  std::vector<std::string> required_encoders;
  Capabilities capabilities;

  ThirdEncoderPolicy third_encoder_policy() const {
    return capabilities.can_drop_third_encoder ? ThirdEncoderPolicy::kDrop : ThirdEncoderPolicy::kSeedWord;
  }
};

/// A frozen text-to-image model. Implementations never modify the request's
/// checkpoint and are safe to call concurrently.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  /// Throws kBackendUnavailable with a hint on how to fix it.
  virtual void check_available() const = 0;
  /// Throws kDimensionMismatch when the token does not fit the encoders.
  virtual void check_checkpoint(const encoders::TokenEmbedding& token) const = 0;
  /// PNG bytes of one image for `seed`.
  virtual std::vector<std::uint8_t> generate(const GenerationRequest& request, std::uint64_t seed) const = 0;
};

/// Deterministic test double: hashes the conditioning vector, the seed and
/// the size into one solid colour. Encoders that cannot host the marker are
/// dropped or fed the seed word according to the descriptor's policy.
class StubBackend final : public GenerationBackend {
 public:
  StubBackend(encoders::EncoderSet encoders, std::string marker = std::string(corpus::kDefaultMarker),
              Capabilities caps = {});

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  void check_available() const override {}
  void check_checkpoint(const encoders::TokenEmbedding& token) const override;
  std::vector<std::uint8_t> generate(const GenerationRequest& request, std::uint64_t seed) const override;

  /// Conditioning actually fed to the stub for `request`.
  encoders::ConditioningVector conditioning(const GenerationRequest& request) const;
  const encoders::EncoderSet& encoders() const { return encoders_; }

 private:
  encoders::EncoderSet encoders_;
  std::string marker_;
  BackendDescriptor descriptor_;
};

struct HttpDiffusionConfig {
  std::string name = "diffusion";
  std::string url = "http://127.0.0.1:8201";
  int timeout_seconds = 600;
};

/// Client for tools/bridges/diffusion_server.py (JSON over HTTP).
class HttpDiffusionBackend final : public GenerationBackend {
 public:
  explicit HttpDiffusionBackend(HttpDiffusionConfig config);
  ~HttpDiffusionBackend() override;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  void check_available() const override;
  void check_checkpoint(const encoders::TokenEmbedding& token) const override;
  std::vector<std::uint8_t> generate(const GenerationRequest& request, std::uint64_t seed) const override;

 private:
  struct Client;
  HttpDiffusionConfig config_;
  std::unique_ptr<Client> client_;
  BackendDescriptor descriptor_;
  std::vector<std::pair<std::string, std::size_t>> encoder_dims_;
};

struct ManifestRow {
  std::string pair_first;
  std::string pair_second;
  std::string prompt;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
  std::string backend;
  std::string image_path;  // relative to the manifest's directory
  double ms_per_image = 0.0;
};

inline constexpr std::string_view kManifestHeader =
    "pair_first,pair_second,prompt,seed,checkpoint_id,backend,image_path,ms_per_image";

std::string serialize_manifest(std::span<const ManifestRow> rows);
std::vector<ManifestRow> parse_manifest(std::string_view text, std::string_view source = "manifest");
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Renders `request.count` images (seeds seed, seed+1, ...) into
/// `out_dir/images/`. Nothing is written when the backend is unavailable.
std::vector<ManifestRow> render(const GenerationRequest& request, const GenerationBackend& backend,
                                const std::filesystem::path& out_dir, std::string_view stem = "image");

struct BatchOptions {
  std::uint64_t base_seed = 0;
  std::size_t seeds_per_pair = 1;
  std::size_t workers = 1;
};

struct RenderFailure {
  std::string pair_first;
  std::string pair_second;
  std::uint64_t seed = 0;
  std::string reason;
};

struct BatchResult {
  std::vector<ManifestRow> rows;
  std::vector<RenderFailure> failures;
};

/// One image per (pair, seed). Row r (pairs in order, seeds inner) uses
/// seed base_seed + r, so repeated pairs get distinct seeds. Writes
/// out_dir/manifest.csv, plus out_dir/failures.csv when a render fails.
BatchResult batch_render(std::span<const corpus::TextPair> pairs, const corpus::PromptTemplate& tmpl,
                         const GenerationRequest& defaults, const GenerationBackend& backend,
                         const std::filesystem::path& out_dir, const BatchOptions& options = {});

/// Builds a generation backend from JSON:
///   {"type": "stub", "encoders": <encoder config>, "drop_third_encoder": true}
///   {"type": "http", "name": "sd3", "url": "http://127.0.0.1:8201"}
std::unique_ptr<GenerationBackend> parse_backend_config(std::string_view json_text,
                                                        const std::filesystem::path& base_dir = {});
std::unique_ptr<GenerationBackend> load_backend_config(const std::filesystem::path& path);

}  // namespace cretok::generation

#include "cretok/generation.hpp"

#include <httplib.h>

#include <atomic>
#include <bit>
#include <cctype>
#include <chrono>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "cretok/backend_config.hpp"
#include "cretok/checkpoint.hpp"
#include "cretok/error.hpp"
#include "cretok/io.hpp"
#include "cretok/png.hpp"
#include "detail/http.hpp"

namespace cretok::generation {

namespace fs = std::filesystem;
using nlohmann::json;

void GenerationRequest::validate() const {
  if (prompt.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::kEmptyPrompt, "generation prompt is empty");
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count must be at least 1");
  if (size.width == 0 || size.height == 0) throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
}

std::string_view to_string(ThirdEncoderPolicy policy) {
  return policy == ThirdEncoderPolicy::kDrop ? "drop" : "seed-word";
}

StubBackend::StubBackend(encoders::EncoderSet encoders, std::string marker, Capabilities caps)
    : encoders_(std::move(encoders)), marker_(std::move(marker)) {
  descriptor_.name = "stub";
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const auto& info = encoders_.at(i).info();
    descriptor_.required_encoders.push_back(info.name);
    if (!info.injectable) caps.has_third_encoder = true;
  }
  descriptor_.capabilities = caps;
  bool injected = false;
  for (std::size_t i = 0; i < encoders_.size(); ++i) injected = injected || encoders_.at(i).injected_marker();
  if (!injected && !encoders_.trainable().empty()) encoders_.inject(marker_);
}

void StubBackend::check_checkpoint(const encoders::TokenEmbedding& token) const {
  if (token.marker != marker_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "checkpoint marker '" + token.marker + "' differs from backend marker '" + marker_ + "'");
  }
  checkpoint::check_compatible(token, encoders_);
}

encoders::ConditioningVector StubBackend::conditioning(const GenerationRequest& request) const {
  std::vector<const encoders::EncoderBackend*> used;
  const bool drop = descriptor_.third_encoder_policy() == ThirdEncoderPolicy::kDrop;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const auto& b = encoders_.at(i);
    if (drop && !b.info().injectable) continue;
    used.push_back(&b);
  }
  return encoders::conditioning(request.prompt, request.checkpoint.get(), used, encoders_.seed_word());
}

std::vector<std::uint8_t> StubBackend::generate(const GenerationRequest& request, std::uint64_t seed) const {
  request.validate();
  const auto cond = conditioning(request);
  std::string bytes;
  bytes.reserve(cond.concatenated.size() * 4 + 16);
  for (double v : cond.concatenated) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>(bits >> (8 * b)));
  }
  bytes += fmt::format("|{}|{}x{}", seed, request.size.width, request.size.height);
  const std::string digest = io::sha256_hex(bytes);
  auto channel = [&](int i) { return static_cast<std::uint8_t>(std::stoul(digest.substr(2 * i, 2), nullptr, 16)); };
  return png::encode(png::solid(request.size.width, request.size.height, channel(0), channel(1), channel(2)));
}

struct HttpDiffusionBackend::Client {
  explicit Client(const std::string& origin) : http(origin) {}
  httplib::Client http;
  std::mutex mu;
};

HttpDiffusionBackend::HttpDiffusionBackend(HttpDiffusionConfig config)
    : config_(std::move(config)), client_(std::make_unique<Client>(detail::split_url(config_.url).origin)) {
  client_->http.set_connection_timeout(10, 0);
  client_->http.set_read_timeout(config_.timeout_seconds, 0);
  descriptor_.name = config_.name;
  check_available();
}

HttpDiffusionBackend::~HttpDiffusionBackend() = default;

void HttpDiffusionBackend::check_available() const {
  httplib::Result res;
  {
    std::lock_guard lock(client_->mu);
    res = client_->http.Get("/info");
  }
  if (!res || res->status != 200) {
    throw Error(ErrorCode::kBackendUnavailable,
                "diffusion service '" + config_.name + "' at " + config_.url +
                    " is not reachable; start tools/bridges/diffusion_server.py with model weights or fix the URL");
  }
  if (!encoder_dims_.empty()) return;
  const auto doc = json::parse(res->body);
  auto& self = const_cast<HttpDiffusionBackend&>(*this);
  auto& caps = self.descriptor_.capabilities;
  caps.has_third_encoder = doc.value("has_third_encoder", false);
  caps.can_drop_third_encoder = doc.value("can_drop_third_encoder", true);
  caps.supports_seeding = doc.value("supports_seeding", true);
  self.descriptor_.required_encoders.clear();
  for (const auto& e : doc.value("encoders", json::array())) {
    self.descriptor_.required_encoders.push_back(e.at("name").get<std::string>());
    if (e.value("injectable", true))
      self.encoder_dims_.emplace_back(e.at("name").get<std::string>(), e.at("embed_dim").get<std::size_t>());
  }
}

void HttpDiffusionBackend::check_checkpoint(const encoders::TokenEmbedding& token) const {
  for (const auto& [name, dim] : encoder_dims_) {
    const auto v = token.vector_for(name);
    if (v.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, fmt::format("checkpoint has {} values for encoder '{}', backend expects {}",
                                                             v.size(), name, dim));
    }
  }
}

std::vector<std::uint8_t> HttpDiffusionBackend::generate(const GenerationRequest& request, std::uint64_t seed) const {
  request.validate();
  json req{{"prompt", request.prompt},
           {"seed", seed},
           {"width", request.size.width},
           {"height", request.size.height},
           {"sampler", request.sampler},
           {"third_encoder", std::string(to_string(descriptor_.third_encoder_policy()))}};
  if (request.checkpoint) {
    req["marker"] = request.checkpoint->marker;
    json token = json::object();
    for (const auto& v : request.checkpoint->vectors) token[v.backend] = v.values;
    req["token"] = token;
  }
  httplib::Result res;
  {
    std::lock_guard lock(client_->mu);
    res = client_->http.Post("/generate", req.dump(), "application/json");
  }
  if (!res) throw Error(ErrorCode::kBackendUnavailable, "diffusion service '" + config_.name + "' unreachable");
  if (res->status != 200)
    throw Error(ErrorCode::kBackendUnavailable, fmt::format("diffusion service returned {}: {}", res->status, res->body));
  const auto bytes = io::base64_decode(json::parse(res->body).at("png_base64").get<std::string>());
  png::decode(bytes);  // reject garbage early
  return bytes;
}

std::string serialize_manifest(std::span<const ManifestRow> rows) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += io::csv_join({r.pair_first, r.pair_second, r.prompt, std::to_string(r.seed), r.checkpoint_id, r.backend,
                         r.image_path, fmt::format("{:.4f}", r.ms_per_image)});
    out += '\n';
  }
  return out;
}

std::vector<ManifestRow> parse_manifest(std::string_view text, std::string_view source) {
  const auto table = io::parse_csv(text, source);
  if (io::csv_join(table.header) != kManifestHeader)
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": unexpected manifest header");
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    try {
      rows.push_back({f[0], f[1], f[2], std::stoull(f[3]), f[4], f[5], f[6], std::stod(f[7])});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("{}:{}: bad number", source, table.lines[i]));
    }
  }
  return rows;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  return parse_manifest(io::read_file(path), path.string());
}

namespace {

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '-';
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  return std::max(1e-4, static_cast<double>(ns.count()) / 1e6);
}

void prepare(const GenerationRequest& request, const GenerationBackend& backend) {
  request.validate();
  backend.check_available();
  if (request.checkpoint) backend.check_checkpoint(*request.checkpoint);
}

}  // namespace

std::vector<ManifestRow> render(const GenerationRequest& request, const GenerationBackend& backend,
                                const fs::path& out_dir, std::string_view stem) {
  prepare(request, backend);
  std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> images;
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < request.count; ++i) {
    const std::uint64_t seed = request.seed + i;
    const auto start = std::chrono::steady_clock::now();
    auto bytes = backend.generate(request, seed);
    const double ms = elapsed_ms(start);
    const std::string rel = fmt::format("images/{}_s{}.png", slug(stem), seed);
    rows.push_back({"", "", request.prompt, seed, request.checkpoint_id, backend.descriptor().name, rel, ms});
    images.emplace_back(out_dir / rel, std::move(bytes));
  }
  fs::create_directories(out_dir / "images");
  for (const auto& [path, bytes] : images)
    io::write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  return rows;
}

BatchResult batch_render(std::span<const corpus::TextPair> pairs, const corpus::PromptTemplate& tmpl,
                         const GenerationRequest& defaults, const GenerationBackend& backend, const fs::path& out_dir,
                         const BatchOptions& options) {
  if (options.seeds_per_pair < 1) throw Error(ErrorCode::kInvalidArgument, "seeds_per_pair must be at least 1");
  const std::string marker = defaults.checkpoint ? defaults.checkpoint->marker : std::string(corpus::kDefaultMarker);

  struct Job {
    const corpus::TextPair* pair;
    std::uint64_t seed;
    std::string prompt;
  };
  std::vector<Job> jobs;
  for (const auto& p : pairs) {
    const std::vector<std::string> concepts{p.first, p.second};
    const std::string prompt = corpus::render_adaptive(tmpl, marker, concepts);
    for (std::size_t s = 0; s < options.seeds_per_pair; ++s)
      jobs.push_back({&p, options.base_seed + jobs.size(), prompt});
  }

  GenerationRequest probe = defaults;
  if (probe.prompt.empty()) probe.prompt = marker;
  prepare(probe, backend);
  fs::create_directories(out_dir / "images");

  std::vector<std::optional<ManifestRow>> done(jobs.size());
  std::vector<std::optional<RenderFailure>> failed(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto& job = jobs[j];
      GenerationRequest req = defaults;
      req.prompt = job.prompt;
      req.count = 1;
      try {
        const auto start = std::chrono::steady_clock::now();
        const auto bytes = backend.generate(req, job.seed);
        const double ms = elapsed_ms(start);
        const std::string rel = fmt::format("images/{:04d}_{}_{}_s{}.png", j, slug(job.pair->first),
                                            slug(job.pair->second), job.seed);
        io::write_file_atomic(out_dir / rel,
                              std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        done[j] = ManifestRow{job.pair->first, job.pair->second, job.prompt, job.seed, defaults.checkpoint_id,
                              backend.descriptor().name, rel, ms};
      } catch (const std::exception& e) {
        failed[j] = RenderFailure{job.pair->first, job.pair->second, job.seed, e.what()};
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, jobs.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  BatchResult result;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (done[j]) result.rows.push_back(std::move(*done[j]));
    if (failed[j]) result.failures.push_back(std::move(*failed[j]));
  }
  io::write_file_atomic(out_dir / "manifest.csv", serialize_manifest(result.rows));
  if (!result.failures.empty()) {
    std::string text = "pair_first,pair_second,seed,reason\n";
    for (const auto& f : result.failures)
      text += io::csv_join({f.pair_first, f.pair_second, std::to_string(f.seed), f.reason}) + "\n";
    io::write_file_atomic(out_dir / "failures.csv", text);
  }
  return result;
}

std::unique_ptr<GenerationBackend> parse_backend_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("backend config: ") + e.what());
  }
  const std::string type = doc.value("type", std::string("stub"));
  if (type == "stub") {
    encoders::EncoderSet set;
    if (!doc.contains("encoders")) {
      set = encoders::default_toy_encoders();
    } else if (doc["encoders"].is_string()) {
      set = encoders::load_encoder_config(base_dir / doc["encoders"].get<std::string>());
    } else {
      set = encoders::parse_encoder_config(doc["encoders"].dump());
    }
    Capabilities caps;
    caps.can_drop_third_encoder = doc.value("drop_third_encoder", true);
    return std::make_unique<StubBackend>(std::move(set), doc.value("marker", std::string(corpus::kDefaultMarker)),
                                         caps);
  }
  if (type == "http") {
    HttpDiffusionConfig c;
    c.name = doc.value("name", c.name);
    c.url = doc.value("url", c.url);
    c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
    return std::make_unique<HttpDiffusionBackend>(c);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown generation backend type '" + type + "'");
}

std::unique_ptr<GenerationBackend> load_backend_config(const fs::path& path) {
  return parse_backend_config(io::read_file(path), path.parent_path());
}

}  // namespace cretok::generation

#include "cretok/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "cretok/error.hpp"
#include "cretok/io.hpp"

namespace cretok::checkpoint {

namespace {

std::vector<std::uint8_t> to_le_f32(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return bytes;
}

std::vector<double> from_le_f32(const std::vector<std::uint8_t>& bytes) {
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

}  // namespace

std::string serialize(const encoders::TokenEmbedding& token) {
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["marker"] = token.marker;
  doc["step"] = token.step;
  doc["entries"] = nlohmann::json::array();
  for (const auto& v : token.vectors) {
    doc["entries"].push_back({{"backend", v.backend},
                              {"dimension", v.values.size()},
                              {"dtype", "float32-le"},
                              {"data", io::base64_encode(to_le_f32(v.values))}});
  }
  return doc.dump(2) + "\n";
}

encoders::TokenEmbedding parse(std::string_view text) {
  encoders::TokenEmbedding token;
  try {
    const auto doc = nlohmann::json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
      throw Error(ErrorCode::kCheckpointFormat, "unsupported checkpoint format_version " + std::to_string(version));
    token.marker = doc.at("marker").get<std::string>();
    token.step = doc.at("step").get<std::int64_t>();
    for (const auto& e : doc.at("entries")) {
      if (e.value("dtype", "float32-le") != "float32-le")
        throw Error(ErrorCode::kCheckpointFormat, "unsupported dtype " + e.at("dtype").get<std::string>());
      encoders::BackendVector v;
      v.backend = e.at("backend").get<std::string>();
      v.values = from_le_f32(io::base64_decode(e.at("data").get<std::string>()));
      const auto dim = e.at("dimension").get<std::size_t>();
      if (v.values.size() != dim) {
        throw Error(ErrorCode::kCheckpointFormat, "entry '" + v.backend + "' declares dimension " +
                                                      std::to_string(dim) + " but holds " +
                                                      std::to_string(v.values.size()));
      }
      token.vectors.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointFormat, std::string("malformed checkpoint: ") + e.what());
  }
  if (!token.all_finite()) throw Error(ErrorCode::kCheckpointFormat, "checkpoint contains non-finite values");
  return token;
}

void save(const std::filesystem::path& path, const encoders::TokenEmbedding& token) {
  io::write_file_atomic(path, serialize(token));
}

encoders::TokenEmbedding load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string checkpoint_id(std::string_view serialized) {
  return io::sha256_hex(serialized).substr(0, 16);
}

void check_compatible(const encoders::TokenEmbedding& token, const encoders::EncoderSet& set) {
  for (const auto& v : token.vectors) {
    const auto* b = set.find(v.backend);
    if (b == nullptr) continue;  // vectors for absent backends are ignored
    if (b->info().embed_dim != v.values.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "checkpoint vector for '" + v.backend + "' has dimension " + std::to_string(v.values.size()) +
                      ", backend expects " + std::to_string(b->info().embed_dim));
    }
  }
}

}  // namespace cretok::checkpoint

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cretok/encoders.hpp"

namespace cretok::checkpoint {

inline constexpr int kFormatVersion = 1;

/// JSON document: {format_version, marker, step, entries: [{backend,
/// dimension, dtype: "float32-le", data: base64}]}. Values are rounded to
/// float32; output bytes are a pure function of the input.
std::string serialize(const encoders::TokenEmbedding& token);
encoders::TokenEmbedding parse(std::string_view text);

void save(const std::filesystem::path& path, const encoders::TokenEmbedding& token);
encoders::TokenEmbedding load(const std::filesystem::path& path);

/// First 16 hex digits of the SHA-256 of the serialized checkpoint.
std::string checkpoint_id(std::string_view serialized);

/// Checks that every vector matches the backend of the same name in `set`.
void check_compatible(const encoders::TokenEmbedding& token, const encoders::EncoderSet& set);

}  // namespace cretok::checkpoint

#pragma once

#include <filesystem>
#include <string_view>

#include "cretok/encoders.hpp"

namespace cretok::encoders {

/// Builds an encoder set from a JSON backend config:
///
///   {"seed_word": "creative",
///    "encoders": [
///      {"type": "toy", "name": "toy-l", "embed_dim": 64, "pooled_dim": 32, "seed": 7, ...},
///      {"type": "http", "name": "clip-l", "url": "http://127.0.0.1:8101"}]}
///
/// Encoder weights for real backends live behind the service URL and are
/// never embedded in checkpoints.
EncoderSet parse_encoder_config(std::string_view json_text);
EncoderSet load_encoder_config(const std::filesystem::path& path);

/// The two-backend toy stand-in for the dual-CLIP setup.
EncoderSet default_toy_encoders();

}  // namespace cretok::encoders

#include "cretok/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "cretok/error.hpp"
#include "cretok/io.hpp"

namespace cretok::encoders {

std::span<const double> TokenEmbedding::vector_for(std::string_view backend) const {
  for (const auto& v : vectors)
    if (v.backend == backend) return v.values;
  return {};
}

std::vector<double>* TokenEmbedding::mutable_vector_for(std::string_view backend) {
  for (auto& v : vectors)
    if (v.backend == backend) return &v.values;
  return nullptr;
}

bool TokenEmbedding::all_finite() const {
  for (const auto& v : vectors)
    for (double x : v.values)
      if (!std::isfinite(x)) return false;
  return true;
}

std::size_t TokenEmbedding::total_size() const {
  std::size_t n = 0;
  for (const auto& v : vectors) n += v.values.size();
  return n;
}

std::string substitute_marker(std::string_view prompt, std::string_view marker,
                              std::string_view replacement) {
  std::string out(prompt);
  if (marker.empty()) return out;
  for (std::size_t pos = out.find(marker); pos != std::string::npos;
       pos = out.find(marker, pos + replacement.size()))
    out.replace(pos, marker.size(), replacement);
  return out;
}

std::vector<double> pooled_embed(const EncoderBackend& backend, std::string_view prompt,
                                 const TokenEmbedding* token, std::string_view seed_word) {
  const auto injected = backend.injected_marker();
  std::span<const double> vec;
  if (token != nullptr && injected && *injected == token->marker)
    vec = token->vector_for(backend.info().name);
  if (!vec.empty()) {
    if (vec.size() != backend.info().embed_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "token vector for '" + backend.info().name + "' has " + std::to_string(vec.size()) +
                      " entries, backend expects " + std::to_string(backend.info().embed_dim));
    }
    return backend.pooled(prompt, vec);
  }
  // No trainable vector for this backend: the marker falls back to the seed word.
  const std::string marker = token != nullptr ? token->marker : injected.value_or("<CreTok>");
  return backend.pooled(substitute_marker(prompt, marker, seed_word), {});
}

EncoderBackend& EncoderSet::add(std::unique_ptr<EncoderBackend> backend) {
  if (!backend) throw Error(ErrorCode::kInvalidArgument, "null encoder backend");
  if (find(backend->info().name) != nullptr)
    throw Error(ErrorCode::kInvalidArgument, "duplicate backend name '" + backend->info().name + "'");
  backends_.push_back(std::move(backend));
  return *backends_.back();
}

const EncoderBackend* EncoderSet::find(std::string_view name) const {
  for (const auto& b : backends_)
    if (b->info().name == name) return b.get();
  return nullptr;
}

TokenEmbedding EncoderSet::inject(std::string_view marker, const TokenInit& init) {
  TokenEmbedding token;
  token.marker = std::string(marker);
  for (auto& b : backends_) {
    if (!b->info().injectable) continue;
    InjectedToken injected = b->inject(marker, init);
    token.vectors.push_back({b->info().name, std::move(injected.initial)});
  }
  if (token.vectors.empty())
    throw Error(ErrorCode::kInjectionUnsupported, "no registered backend accepts token injection");
  return token;
}

std::vector<const EncoderBackend*> EncoderSet::trainable() const {
  std::vector<const EncoderBackend*> out;
  for (const auto& b : backends_)
    if (b->info().injectable) out.push_back(b.get());
  return out;
}

std::string EncoderSet::frozen_checksum() const {
  std::string joined;
  for (const auto& b : backends_) joined += b->info().name + ":" + b->frozen_checksum() + ";";
  return io::sha256_hex(joined);
}

ConditioningVector conditioning(std::string_view prompt, const TokenEmbedding* token,
                                std::span<const EncoderBackend* const> backends,
                                std::string_view seed_word) {
  if (backends.empty()) throw Error(ErrorCode::kInvalidArgument, "no encoder backends registered");
  ConditioningVector out;
  for (const EncoderBackend* b : backends) {
    auto pooled = pooled_embed(*b, prompt, token, seed_word);
    if (pooled.size() != b->info().pooled_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "backend '" + b->info().name + "' returned " + std::to_string(pooled.size()) +
                      " pooled values, declared " + std::to_string(b->info().pooled_dim));
    }
    out.concatenated.insert(out.concatenated.end(), pooled.begin(), pooled.end());
    out.backends.push_back(b->info().name);
    out.pooled.push_back(std::move(pooled));
  }
  return out;
}

ConditioningVector conditioning(std::string_view prompt, const TokenEmbedding* token,
                                const EncoderSet& set) {
  std::vector<const EncoderBackend*> all;
  for (std::size_t i = 0; i < set.size(); ++i) all.push_back(&set.at(i));
  return conditioning(prompt, token, all, set.seed_word());
}

}  // namespace cretok::encoders

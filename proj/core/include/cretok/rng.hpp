#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace cretok {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Advances `state` and returns the next SplitMix64 output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless-by-construction Gaussian stream used for frozen toy weights.
/// Uniforms are ((x >> 11) + 0.5) * 2^-53 and pairs are turned into normals
/// with Box-Muller, cosine branch first. The sequence is fully specified so
/// it can be reproduced outside C++.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

  double uniform();
  double next();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seeded source for sampling decisions. Wraps mt19937_64, whose output
/// sequence is fixed by the standard; distributions are implemented here so
/// results do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  std::string save() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cretok

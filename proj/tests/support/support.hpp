#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cretok/encoders.hpp"
#include "cretok/evaluation.hpp"
#include "cretok/rng.hpp"

namespace cretok::testing {

std::filesystem::path source_dir();
std::filesystem::path data_dir();
std::filesystem::path test_data_dir();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Toy encoder pair with the shipped default configuration.
encoders::EncoderSet default_encoders();

/// Two toy backends with random small dimensions, seeds and gains.
encoders::EncoderSet random_encoders(Rng& rng);

/// Central finite-difference gradient of `f` at `x`.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h);

double norm(const std::vector<double>& v);

/// Reference per-pair average ranks: pair index -> method -> mean rank.
struct ReferenceRanks {
  std::vector<std::string> methods;
  std::vector<std::map<std::string, double>> per_pair;
};
ReferenceRanks load_reference_ranks(const std::filesystem::path& path);

/// `participants` rank permutations per pair whose per-method means equal
/// the reference means exactly (each mean times participants must be an
/// integer and the means must sum to M(M+1)/2). Pair words are "pNN"/"qNN".
std::vector<eval::RankingRecord> synthesize_rankings(const ReferenceRanks& ref, std::size_t participants,
                                                     std::uint64_t seed);

}  // namespace cretok::testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cretok/encoders.hpp"

namespace cretok::cli {

/// Exit status for usage errors and invalid flag combinations.
inline constexpr int kUsageError = 2;

/// Raised for flag combinations rejected before any work starts.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// $CRETOK_DATA_DIR, else the data directory of the source tree.
std::filesystem::path data_dir();

std::vector<double> parse_doubles(const std::string& csv);

/// Writes `dir/run.json`: command, resolved config, its SHA-256, seed and
/// library versions.
void write_run_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                        std::uint64_t seed);

encoders::EncoderSet load_encoders(const std::string& path);

void add_train(CLI::App& app, std::function<int()>& action);
void add_generate(CLI::App& app, std::function<int()>& action);
void add_evaluate(CLI::App& app, std::function<int()>& action);
void add_judge(CLI::App& app, std::function<int()>& action);
void add_report(CLI::App& app, std::function<int()>& action);
void add_study(CLI::App& app, std::function<int()>& action);
void add_dataset(CLI::App& app, std::function<int()>& action);

}  // namespace cretok::cli

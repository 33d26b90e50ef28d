#include "common.hpp"

#include <cstdlib>
#include <sstream>

#include "cretok/backend_config.hpp"
#include "cretok/io.hpp"
#include "cretok/version.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

fs::path data_dir() {
  if (const char* env = std::getenv("CRETOK_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return CRETOK_DEFAULT_DATA_DIR;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& field : io::csv_split(csv)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::logic_error&) {
      throw UsageError("not a number: '" + field + "'");
    }
  }
  return out;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const nlohmann::json& config,
                        std::uint64_t seed) {
  fs::create_directories(dir);
  const std::string canonical = config.dump();
  nlohmann::json doc{{"command", command},
                     {"config", config},
                     {"config_hash", io::sha256_hex(canonical)},
                     {"seed", seed},
                     {"versions", build_info()}};
  io::write_file_atomic(dir / "run.json", doc.dump(2) + "\n");
}

encoders::EncoderSet load_encoders(const std::string& path) {
  if (path.empty()) return encoders::default_toy_encoders();
  return encoders::load_encoder_config(path);
}

}  // namespace cretok::cli

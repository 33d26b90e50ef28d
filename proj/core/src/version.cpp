#include "cretok/version.hpp"

#include <openssl/opensslv.h>
#include <png.h>

#include <fmt/format.h>

namespace cretok {

std::string version() { return CRETOK_VERSION; }

nlohmann::json build_info() {
  return {
      {"cretok", CRETOK_VERSION},
      {"compiler", fmt::format("{} {}", CRETOK_COMPILER_ID, __VERSION__)},
      {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                    NLOHMANN_JSON_VERSION_PATCH)},
      {"fmt", FMT_VERSION},
      {"libpng", PNG_LIBPNG_VER_STRING},
      {"openssl", OPENSSL_VERSION_TEXT},
  };
}

}  // namespace cretok

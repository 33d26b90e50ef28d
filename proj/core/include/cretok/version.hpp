#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace cretok {

std::string version();

/// Library and dependency versions, for run manifests.
nlohmann::json build_info();

}  // namespace cretok

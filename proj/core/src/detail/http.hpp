#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <thread>

#include "cretok/error.hpp"

namespace cretok::detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/', may be empty
};

inline UrlParts split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos)
    throw Error(ErrorCode::kInvalidArgument, "URL '" + std::string(url) + "' has no scheme");
  const auto slash = url.find('/', scheme_end + 3);
  if (slash == std::string_view::npos) return {std::string(url), ""};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

/// Calls `fn` up to `attempts` times, sleeping base, 2*base, 4*base, ...
/// between tries. Only errors with a transient code are retried.
template <class Fn>
auto with_retry(int attempts, std::chrono::milliseconds base, Fn&& fn) -> decltype(fn()) {
  for (int i = 1;; ++i) {
    try {
      return fn();
    } catch (const Error& e) {
      const bool transient =
          e.code() == ErrorCode::kBackendUnavailable || e.code() == ErrorCode::kScorerUnavailable;
      if (!transient || i >= attempts) throw;
      std::this_thread::sleep_for(base * (1 << (i - 1)));
    }
  }
}

}  // namespace cretok::detail

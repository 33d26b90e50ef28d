#include "cretok/http_encoder.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cretok/error.hpp"

namespace cretok::encoders {

namespace {

ErrorCode code_from_name(const std::string& name) {
  for (auto code : {ErrorCode::kAlreadyInjected, ErrorCode::kMarkerCollision, ErrorCode::kInjectionUnsupported,
                    ErrorCode::kPromptOverflow, ErrorCode::kEmptyPrompt, ErrorCode::kDimensionMismatch,
                    ErrorCode::kInvalidArgument})
    if (to_string(code) == name) return code;
  return ErrorCode::kBackendUnavailable;
}

}  // namespace

struct HttpEncoder::Client {
  explicit Client(const std::string& url) : http(url) {}
  httplib::Client http;
};

HttpEncoder::HttpEncoder(HttpEncoderConfig config)
    : config_(std::move(config)), client_(std::make_unique<Client>(config_.url)) {
  client_->http.set_read_timeout(config_.timeout_seconds, 0);
  client_->http.set_connection_timeout(10, 0);
  auto res = client_->http.Get("/info");
  if (!res || res->status != 200) {
    throw Error(ErrorCode::kBackendUnavailable,
                "encoder service '" + config_.name + "' at " + config_.url +
                    " is not reachable; start it (tools/bridges/clip_encoder_server.py) or fix the URL");
  }
  const auto doc = nlohmann::json::parse(res->body);
  info_.name = config_.name.empty() ? doc.at("name").get<std::string>() : config_.name;
  info_.kind = "http";
  if (doc.contains("vocab_size") && !doc["vocab_size"].is_null())
    info_.vocab_size = doc["vocab_size"].get<std::size_t>();
  info_.embed_dim = doc.at("embed_dim").get<std::size_t>();
  info_.pooled_dim = doc.at("pooled_dim").get<std::size_t>();
  info_.max_length = doc.value("max_length", std::size_t{77});
  info_.injectable = doc.value("injectable", true);
  checksum_ = doc.value("checksum", std::string{});
}

HttpEncoder::~HttpEncoder() = default;

std::string HttpEncoder::post(const std::string& path, const std::string& body) const {
  auto res = client_->http.Post(path, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable,
                "encoder service '" + info_.name + "' unreachable at " + config_.url + path);
  }
  if (res->status != 200) {
    std::string code = "BackendUnavailable";
    std::string message = res->body;
    try {
      const auto doc = nlohmann::json::parse(res->body);
      code = doc.value("error", code);
      message = doc.value("message", message);
    } catch (const nlohmann::json::exception&) {
    }
    throw Error(code_from_name(code), info_.name + path + ": " + message);
  }
  return res->body;
}

std::vector<Token> HttpEncoder::tokenize(std::string_view prompt) const {
  const auto doc = nlohmann::json::parse(post("/tokenize", nlohmann::json{{"prompt", prompt}}.dump()));
  std::vector<Token> out;
  for (const auto& t : doc.at("tokens"))
    out.push_back({t.at("text").get<std::string>(), t.at("id").get<std::uint64_t>(), t.value("is_marker", false)});
  return out;
}

InjectedToken HttpEncoder::inject(std::string_view marker, const TokenInit& init) {
  if (marker_)
    throw Error(ErrorCode::kAlreadyInjected, "backend '" + info_.name + "' already hosts marker '" + *marker_ + "'");
  nlohmann::json req{{"marker", marker},
                     {"init", init.policy == InitPolicy::kSeedWord ? "seed-word" : "gaussian"},
                     {"seed_word", init.seed_word},
                     {"seed", init.seed}};
  const auto doc = nlohmann::json::parse(post("/inject", req.dump()));
  InjectedToken out;
  out.id = doc.at("id").get<std::uint64_t>();
  out.initial = doc.at("vector").get<std::vector<double>>();
  marker_ = std::string(marker);
  return out;
}

std::vector<double> HttpEncoder::pooled(std::string_view prompt, std::span<const double> token) const {
  nlohmann::json req{{"prompt", prompt}, {"token", std::vector<double>(token.begin(), token.end())}};
  return nlohmann::json::parse(post("/pooled", req.dump())).at("pooled").get<std::vector<double>>();
}

std::vector<double> HttpEncoder::pooled_vjp(std::string_view prompt, std::span<const double> token,
                                            std::span<const double> upstream) const {
  nlohmann::json req{{"prompt", prompt},
                     {"token", std::vector<double>(token.begin(), token.end())},
                     {"upstream", std::vector<double>(upstream.begin(), upstream.end())}};
  return nlohmann::json::parse(post("/vjp", req.dump())).at("grad").get<std::vector<double>>();
}

std::string HttpEncoder::frozen_checksum() const {
  // The service reports a digest of its weights; re-query so a swapped model is noticed.
  auto res = client_->http.Get("/info");
  if (!res || res->status != 200)
    throw Error(ErrorCode::kBackendUnavailable, "encoder service '" + info_.name + "' unreachable");
  return nlohmann::json::parse(res->body).value("checksum", checksum_);
}

}  // namespace cretok::encoders

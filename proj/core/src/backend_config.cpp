#include "cretok/backend_config.hpp"

#include <nlohmann/json.hpp>

#include "cretok/error.hpp"
#include "cretok/http_encoder.hpp"
#include "cretok/io.hpp"
#include "cretok/toy_encoder.hpp"

namespace cretok::encoders {

EncoderSet parse_encoder_config(std::string_view json_text) {
  EncoderSet set;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    set.set_seed_word(doc.value("seed_word", std::string(kDefaultSeedWord)));
    for (const auto& e : doc.at("encoders")) {
      const auto type = e.at("type").get<std::string>();
      if (type == "toy") {
        ToyEncoderConfig c;
        c.name = e.at("name").get<std::string>();
        c.embed_dim = e.value("embed_dim", c.embed_dim);
        c.pooled_dim = e.value("pooled_dim", c.pooled_dim);
        c.max_length = e.value("max_length", c.max_length);
        c.seed = e.value("seed", c.seed);
        c.gain = e.value("gain", c.gain);
        c.bias_scale = e.value("bias_scale", c.bias_scale);
        c.embedding_scale = e.value("embedding_scale", c.embedding_scale);
        c.injectable = e.value("injectable", c.injectable);
        set.add(std::make_unique<ToyEncoder>(c));
      } else if (type == "http") {
        HttpEncoderConfig c;
        c.name = e.value("name", std::string{});
        c.url = e.at("url").get<std::string>();
        c.timeout_seconds = e.value("timeout_seconds", c.timeout_seconds);
        set.add(std::make_unique<HttpEncoder>(c));
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown encoder type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("encoder config: ") + e.what());
  }
  if (set.empty()) throw Error(ErrorCode::kInvalidArgument, "encoder config lists no encoders");
  return set;
}

EncoderSet load_encoder_config(const std::filesystem::path& path) {
  return parse_encoder_config(io::read_file(path));
}

EncoderSet default_toy_encoders() {
  EncoderSet set;
  ToyEncoderConfig l;
  l.name = "toy-l";
  l.embed_dim = 10;
  l.pooled_dim = 5;
  l.seed = 8;
  l.gain = 2.5;
  ToyEncoderConfig g;
  g.name = "toy-g";
  g.embed_dim = 14;
  g.pooled_dim = 7;
  g.seed = 108;
  g.gain = 2.5;
  set.add(std::make_unique<ToyEncoder>(l));
  set.add(std::make_unique<ToyEncoder>(g));
  return set;
}

}  // namespace cretok::encoders

#include "cretok/evaluation.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cretok/error.hpp"
#include "cretok/io.hpp"
#include "cretok/png.hpp"
#include "detail/http.hpp"

namespace cretok::eval {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kAlignment: return "alignment";
    case ScorerKind::kPreferencePick: return "preference-pick";
    case ScorerKind::kPreferenceReward: return "preference-reward";
    case ScorerKind::kJudge: return "judge";
  }
  return "alignment";
}

ScorerKind parse_scorer_kind(std::string_view text) {
  for (auto k : {ScorerKind::kAlignment, ScorerKind::kPreferencePick, ScorerKind::kPreferenceReward, ScorerKind::kJudge})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::kInvalidArgument, "unknown scorer kind '" + std::string(text) + "'");
}

StubScorer::StubScorer(std::string name, ScorerKind kind, std::optional<double> fixed)
    : name_(std::move(name)), kind_(kind), fixed_(fixed) {}

ScoreValue StubScorer::score(const ScoreInput& input) const {
  ScoreValue out;
  std::string material(reinterpret_cast<const char*>(input.png.data()), input.png.size());
  material += '|' + input.prompt + '|' + name_;
  const std::string digest = io::sha256_hex(material);
  auto byte = [&](int i) { return std::stoul(digest.substr(2 * i, 2), nullptr, 16); };
  const double u = static_cast<double>(std::stoull(digest.substr(0, 13), nullptr, 16)) / static_cast<double>(1ULL << 52);

  if (kind_ != ScorerKind::kJudge) {
    if (fixed_) {
      out.value = *fixed_;
    } else if (kind_ == ScorerKind::kAlignment) {
      out.value = u;
    } else if (kind_ == ScorerKind::kPreferencePick) {
      out.value = 20.0 + 2.0 * u;
    } else {
      out.value = 2.0 * u - 0.5;
    }
    return out;
  }
  std::array<double, 5> s{};
  for (int i = 0; i < 5; ++i) s[i] = fixed_ ? *fixed_ : 6.0 + static_cast<double>(byte(i + 8) % 5);
  out.raw = fmt::format(
      "Conceptual Integration: {}\nAlignment with Prompt: {}\nOriginality: {}\nAesthetic Quality: {}\n"
      "Comprehensive: {}\n",
      s[0], s[1], s[2], s[3], s[4]);
  out.judge = parse_judge(out.raw);
  return out;
}

namespace {

ErrorCode status_code(int status) {
  return (status == 429 || status >= 500) ? ErrorCode::kScorerUnavailable : ErrorCode::kInvalidArgument;
}

}  // namespace

struct HttpScorer::Client {
  explicit Client(const std::string& origin) : http(origin) {}
  httplib::Client http;
  std::mutex mu;
};

HttpScorer::HttpScorer(HttpScorerConfig config) : config_(std::move(config)) {
  if (config_.name.empty() || config_.url.empty())
    throw Error(ErrorCode::kInvalidArgument, "http scorer needs a name and a url");
  client_ = std::make_unique<Client>(detail::split_url(config_.url).origin);
  client_->http.set_connection_timeout(10, 0);
  client_->http.set_read_timeout(config_.timeout_seconds, 0);
}

HttpScorer::~HttpScorer() = default;

ScoreValue HttpScorer::score(const ScoreInput& input) const {
  const std::string path = detail::split_url(config_.url).path;
  const std::string body = json{{"scorer", config_.name},
                                {"prompt", input.prompt},
                                {"image_base64", io::base64_encode(input.png)}}
                               .dump();
  return detail::with_retry(config_.retry.attempts, config_.retry.base_delay, [&] {
    httplib::Result res;
    {
      std::lock_guard lock(client_->mu);
      res = client_->http.Post(path.empty() ? "/" : path, body, "application/json");
    }
    if (!res) throw Error(ErrorCode::kScorerUnavailable, "scorer '" + config_.name + "' unreachable at " + config_.url);
    if (res->status != 200)
      throw Error(status_code(res->status), fmt::format("scorer '{}' returned {}: {}", config_.name, res->status, res->body));
    ScoreValue out;
    out.value = json::parse(res->body).at("value").get<double>();
    return out;
  });
}

struct JudgeScorer::Client {
  explicit Client(const std::string& origin) : http(origin) {}
  httplib::Client http;
  std::mutex mu;
};

JudgeScorer::JudgeScorer(JudgeClientConfig config) : config_(std::move(config)) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kScorerUnavailable,
                "judge credential missing: set " + config_.api_key_env + " to an API key for " + config_.url);
  }
  api_key_ = key;
  version_ = config_.model + "/" + config_.version;
  if (config_.temperature) version_ += fmt::format("/t{}", *config_.temperature);
  client_ = std::make_unique<Client>(detail::split_url(config_.url).origin);
  client_->http.set_connection_timeout(10, 0);
  client_->http.set_read_timeout(config_.timeout_seconds, 0);
}

JudgeScorer::~JudgeScorer() = default;

std::string JudgeScorer::ask(std::string_view t1, std::string_view t2, std::span<const std::uint8_t> png) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", judge_prompt(t1, t2)}});
  content.push_back(
      {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + io::base64_encode(png)}}}});
  json req{{"model", config_.model}, {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  if (config_.temperature) req["temperature"] = *config_.temperature;
  const std::string body = req.dump();
  const std::string path = detail::split_url(config_.url).path;
  const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

  return detail::with_retry(config_.retry.attempts, config_.retry.base_delay, [&] {
    httplib::Result res;
    {
      std::lock_guard lock(client_->mu);
      res = client_->http.Post(path, headers, body, "application/json");
    }
    if (!res) throw Error(ErrorCode::kScorerUnavailable, "judge endpoint unreachable at " + config_.url);
    if (res->status != 200)
      throw Error(status_code(res->status), fmt::format("judge returned {}: {}", res->status, res->body));
    return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
  });
}

ScoreValue JudgeScorer::score(const ScoreInput& input) const {
  ScoreValue out;
  out.raw = ask(input.pair_first, input.pair_second, input.png);
  const auto parsed = try_parse_judge(out.raw);
  if (!parsed.scores) throw Error(parsed.error, parsed.message);
  out.judge = parsed.scores;
  return out;
}

std::vector<std::unique_ptr<Scorer>> parse_scorer_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("scorer config: ") + e.what());
  }
  std::vector<std::unique_ptr<Scorer>> out;
  for (const auto& s : doc.at("scorers")) {
    const std::string type = s.value("type", std::string("stub"));
    if (type == "stub") {
      std::optional<double> fixed;
      if (s.contains("fixed")) fixed = s["fixed"].get<double>();
      out.push_back(std::make_unique<StubScorer>(s.at("name").get<std::string>(),
                                                 parse_scorer_kind(s.value("kind", std::string("alignment"))), fixed));
    } else if (type == "http") {
      HttpScorerConfig c;
      c.name = s.at("name").get<std::string>();
      c.kind = parse_scorer_kind(s.value("kind", std::string("alignment")));
      c.url = s.at("url").get<std::string>();
      c.version = s.value("version", c.version);
      c.retry.attempts = s.value("attempts", c.retry.attempts);
      out.push_back(std::make_unique<HttpScorer>(c));
    } else if (type == "judge") {
      JudgeClientConfig c;
      c.name = s.value("name", c.name);
      c.url = s.value("url", c.url);
      c.model = s.value("model", c.model);
      c.api_key_env = s.value("api_key_env", c.api_key_env);
      if (s.contains("temperature")) c.temperature = s["temperature"].get<double>();
      c.version = s.value("version", c.version);
      c.retry.attempts = s.value("attempts", c.retry.attempts);
      out.push_back(std::make_unique<JudgeScorer>(c));
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown scorer type '" + type + "'");
    }
  }
  return out;
}

std::vector<std::unique_ptr<Scorer>> load_scorer_config(const fs::path& path) {
  return parse_scorer_config(io::read_file(path));
}

std::vector<std::unique_ptr<Scorer>> default_stub_scorers() {
  std::vector<std::unique_ptr<Scorer>> out;
  out.push_back(std::make_unique<StubScorer>("VQAScore", ScorerKind::kAlignment));
  out.push_back(std::make_unique<StubScorer>("PickScore", ScorerKind::kPreferencePick));
  out.push_back(std::make_unique<StubScorer>("ImageReward", ScorerKind::kPreferenceReward));
  out.push_back(std::make_unique<StubScorer>("judge", ScorerKind::kJudge));
  return out;
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string ResponseCache::key(const ScoreInput& input, const Scorer& scorer) {
  const std::string image_hash =
      io::sha256_hex(std::string_view(reinterpret_cast<const char*>(input.png.data()), input.png.size()));
  return io::sha256_hex(image_hash + "\n" + input.prompt + "\n" + input.pair_first + "\n" + input.pair_second +
                        "\n" + scorer.name() + "\n" + scorer.version());
}

std::optional<ScoreValue> ResponseCache::get(const std::string& key) const {
  const fs::path p = dir_ / (key + ".json");
  if (!fs::exists(p)) return std::nullopt;
  try {
    const auto doc = json::parse(io::read_file(p));
    ScoreValue v;
    if (doc.contains("value")) v.value = doc["value"].get<double>();
    if (doc.contains("judge")) {
      const auto s = doc["judge"].get<std::vector<double>>();
      if (s.size() != 5) return std::nullopt;
      v.judge = JudgeScores{s[0], s[1], s[2], s[3], s[4]};
    }
    v.raw = doc.value("raw", std::string{});
    return v;
  } catch (const std::exception&) {
    return std::nullopt;  // treat a damaged entry as a miss
  }
}

void ResponseCache::put(const std::string& key, const ScoreValue& value) const {
  json doc = json::object();
  if (value.value) doc["value"] = *value.value;
  if (value.judge) {
    const auto v = value.judge->values();
    doc["judge"] = std::vector<double>(v.begin(), v.end());
  }
  if (!value.raw.empty()) doc["raw"] = value.raw;
  io::write_file_atomic(dir_ / (key + ".json"), doc.dump() + "\n");
}

namespace {

std::string num(std::optional<double> v) { return v ? fmt::format("{}", *v) : std::string{}; }

std::optional<double> opt_num(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::string serialize_records(std::span<const ScoreRecord> records) {
  std::string out(kRecordsHeader);
  out += '\n';
  for (const auto& r : records) {
    std::vector<std::string> f{r.image_id, r.method, r.prompt, r.scorer, std::string(to_string(r.kind)),
                               r.ok ? "ok" : "failed", num(r.value)};
    for (std::size_t i = 0; i < 5; ++i) f.push_back(r.judge ? num(r.judge->values()[i]) : std::string{});
    f.push_back(r.reason);
    out += io::csv_join(f) + "\n";
  }
  return out;
}

std::vector<ScoreRecord> parse_records(std::string_view text, std::string_view source) {
  const auto table = io::parse_csv(text, source);
  if (io::csv_join(table.header) != kRecordsHeader)
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": unexpected records header");
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    ScoreRecord r;
    try {
      r.image_id = f[0];
      r.method = f[1];
      r.prompt = f[2];
      r.scorer = f[3];
      r.kind = parse_scorer_kind(f[4]);
      r.ok = f[5] == "ok";
      r.value = opt_num(f[6]);
      if (!f[7].empty()) {
        r.judge = JudgeScores{std::stod(f[7]), std::stod(f[8]), std::stod(f[9]), std::stod(f[10]), std::stod(f[11])};
      }
      r.reason = f[12];
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("{}:{}: bad number", source, table.lines[i]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreRecord> read_records(const fs::path& path) { return parse_records(io::read_file(path), path.string()); }

std::vector<ScoreRecord> score_images(std::span<const generation::ManifestRow> manifest, const fs::path& manifest_dir,
                                      std::span<const Scorer* const> scorers, const ScoreOptions& options) {
  if (scorers.empty()) throw Error(ErrorCode::kScorerUnavailable, "no scorer configured");
  std::vector<ScoreRecord> out(manifest.size() * scorers.size());
  std::atomic<std::size_t> next{0};

  auto score_row = [&](std::size_t i) {
    const auto& row = manifest[i];
    std::string bytes;
    std::string image_error;
    try {
      bytes = io::read_file(manifest_dir / row.image_path);
      png::decode(bytes);
    } catch (const std::exception& e) {
      image_error = std::string("unreadable image: ") + e.what();
    }
    const ScoreInput input{row.image_path, row.prompt, row.pair_first, row.pair_second,
                           std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size())};
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      const Scorer& scorer = *scorers[s];
      ScoreRecord& rec = out[i * scorers.size() + s];
      rec.image_id = row.image_path;
      rec.method = options.method;
      rec.prompt = row.prompt;
      rec.scorer = scorer.name();
      rec.kind = scorer.kind();
      if (!image_error.empty()) {
        rec.reason = image_error;
        continue;
      }
      try {
        std::optional<ScoreValue> v;
        std::string key;
        if (options.cache) {
          key = ResponseCache::key(input, scorer);
          v = options.cache->get(key);
        }
        if (!v) {
          v = scorer.score(input);
          if (options.cache) options.cache->put(key, *v);
        }
        if (scorer.kind() == ScorerKind::kJudge && !v->judge) throw Error(ErrorCode::kUnparseable, "judge gave no scores");
        if (scorer.kind() != ScorerKind::kJudge && (!v->value || !std::isfinite(*v->value)))
          throw Error(ErrorCode::kUnparseable, "scorer gave no finite value");
        if (scorer.kind() == ScorerKind::kAlignment && (*v->value < 0.0 || *v->value > 1.0))
          throw Error(ErrorCode::kOutOfRange, fmt::format("alignment score {} outside [0, 1]", *v->value));
        rec.value = v->value;
        rec.judge = v->judge;
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.reason = e.what();
      }
    }
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) score_row(i);
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(options.workers, manifest.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return out;
}

std::string MeanStd::format(int precision) const {
  return fmt::format("{:.{}f}±{:.{}f}", mean, precision, std, precision);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyGroup, "cannot aggregate an empty group");
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size())), values.size()};
}

std::vector<Aggregate> aggregate_scores(std::span<const ScoreRecord> records) {
  struct Group {
    ScorerKind kind;
    std::vector<double> values;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& r : records) {
    if (r.kind == ScorerKind::kJudge) {
      for (std::size_t i = 0; i < JudgeScores::kNames.size(); ++i) {
        auto& g = groups.try_emplace({r.method, std::string(JudgeScores::kNames[i])}, Group{r.kind, {}}).first->second;
        if (r.ok && r.judge) g.values.push_back(r.judge->values()[i]);
      }
    } else {
      auto& g = groups.try_emplace({r.method, r.scorer}, Group{r.kind, {}}).first->second;
      if (r.ok && r.value) g.values.push_back(*r.value);
    }
  }
  std::vector<Aggregate> out;
  for (const auto& [key, g] : groups) {
    if (g.values.empty())
      throw Error(ErrorCode::kEmptyGroup, "no successful records for " + key.first + " / " + key.second);
    out.push_back({key.first, key.second, g.kind, mean_std(g.values)});
  }
  return out;
}

void RankingRecord::validate() const {
  const std::string where = "ranking from '" + participant + "' for (" + pair_first + ", " + pair_second + ")";
  if (ranks.empty()) throw Error(ErrorCode::kInvalidRanking, where + " is empty");
  std::vector<bool> seen(ranks.size() + 1, false);
  for (const auto& [method, rank] : ranks) {
    if (rank < 1 || rank > static_cast<int>(ranks.size()))
      throw Error(ErrorCode::kInvalidRanking, fmt::format("{}: rank {} for {} outside 1..{}", where, rank, method, ranks.size()));
    if (seen[rank]) throw Error(ErrorCode::kInvalidRanking, fmt::format("{}: rank {} used twice", where, rank));
    seen[rank] = true;
  }
}

std::string serialize_rankings(std::span<const RankingRecord> records) {
  std::string out(kRankingHeader);
  out += '\n';
  for (const auto& r : records) {
    std::vector<std::pair<int, std::string>> by_rank;
    for (const auto& [m, k] : r.ranks) by_rank.emplace_back(k, m);
    std::sort(by_rank.begin(), by_rank.end());
    for (const auto& [k, m] : by_rank)
      out += io::csv_join({r.participant, r.pair_first, r.pair_second, m, std::to_string(k)}) + "\n";
  }
  return out;
}

std::vector<RankingRecord> parse_rankings(std::string_view text, std::string_view source) {
  const auto table = io::parse_csv(text, source);
  if (io::csv_join(table.header) != kRankingHeader)
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": unexpected rankings header");
  std::vector<RankingRecord> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    auto [it, fresh] = index.try_emplace({f[0], f[1], f[2]}, out.size());
    if (fresh) out.push_back({f[0], f[1], f[2], {}});
    auto& rec = out[it->second];
    int rank = 0;
    try {
      rank = std::stoi(f[4]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("{}:{}: bad rank '{}'", source, table.lines[i], f[4]));
    }
    if (!rec.ranks.emplace(f[3], rank).second) {
      throw Error(ErrorCode::kInvalidRanking,
                  fmt::format("{}:{}: method {} ranked twice by the same participant", source, table.lines[i], f[3]));
    }
  }
  for (const auto& r : out) r.validate();
  return out;
}

std::vector<RankingRecord> read_rankings(const fs::path& path) {
  return parse_rankings(io::read_file(path), path.string());
}

std::vector<std::string> order_methods(std::vector<std::string> methods) {
  std::sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
    const auto ia = std::find(kTableMethods.begin(), kTableMethods.end(), a) - kTableMethods.begin();
    const auto ib = std::find(kTableMethods.begin(), kTableMethods.end(), b) - kTableMethods.begin();
    return ia != ib ? ia < ib : a < b;
  });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  return methods;
}

RankingSummary aggregate_rankings(std::span<const RankingRecord> records) {
  RankingSummary out;
  if (records.empty()) return out;
  std::set<std::string> methods;
  for (const auto& [m, k] : records.front().ranks) methods.insert(m);
  out.methods = order_methods({methods.begin(), methods.end()});

  std::map<std::pair<std::string, std::string>, std::size_t> pair_index;
  std::vector<std::map<std::string, double>> sums;
  std::map<std::string, std::vector<double>> all;
  for (const auto& r : records) {
    r.validate();
    if (r.ranks.size() != methods.size() ||
        !std::all_of(r.ranks.begin(), r.ranks.end(), [&](const auto& kv) { return methods.count(kv.first) > 0; })) {
      throw Error(ErrorCode::kInvalidRanking, "ranking from '" + r.participant + "' covers a different method set");
    }
    auto [it, fresh] = pair_index.try_emplace({r.pair_first, r.pair_second}, out.per_pair.size());
    if (fresh) {
      out.per_pair.push_back({r.pair_first, r.pair_second, 0, {}});
      sums.emplace_back();
    }
    auto& p = out.per_pair[it->second];
    ++p.responses;
    for (const auto& [m, k] : r.ranks) {
      sums[it->second][m] += k;
      all[m].push_back(k);
    }
  }
  for (std::size_t i = 0; i < out.per_pair.size(); ++i)
    for (const auto& [m, s] : sums[i]) out.per_pair[i].mean_rank[m] = s / static_cast<double>(out.per_pair[i].responses);
  for (const auto& [m, v] : all) out.overall[m] = mean_std(v);
  out.records = records.size();
  return out;
}

}  // namespace cretok::eval

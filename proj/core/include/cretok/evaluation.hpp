#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cretok/generation.hpp"
#include "cretok/judge.hpp"

namespace cretok::eval {

enum class ScorerKind { kAlignment, kPreferencePick, kPreferenceReward, kJudge };
std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view text);

struct ScoreInput {
  std::string image_id;
  std::string prompt;
  std::string pair_first;
  std::string pair_second;
  std::span<const std::uint8_t> png;
};

struct ScoreValue {
  std::optional<double> value;
  std::optional<JudgeScores> judge;
  std::string raw;  // judge reply text, kept for audit
};

/// Client for an external scoring model. Implementations must be safe to
/// call from several threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const std::string& name() const = 0;
  /// Part of the cache key: bump it when the underlying model changes.
  virtual const std::string& version() const = 0;
  virtual ScorerKind kind() const = 0;
  virtual ScoreValue score(const ScoreInput& input) const = 0;
};

/// Deterministic scorer. With `fixed` every image gets that value (judge
/// scorers report it for all five criteria); otherwise the value is derived
/// from a hash of the image bytes and prompt.
class StubScorer final : public Scorer {
 public:
  StubScorer(std::string name, ScorerKind kind, std::optional<double> fixed = std::nullopt);

  const std::string& name() const override { return name_; }
  const std::string& version() const override { return version_; }
  ScorerKind kind() const override { return kind_; }
  ScoreValue score(const ScoreInput& input) const override;

 private:
  std::string name_;
  std::string version_ = "stub-1";
  ScorerKind kind_;
  std::optional<double> fixed_;
};

struct RetryPolicy {
  int attempts = 4;
  std::chrono::milliseconds base_delay{500};
};

struct HttpScorerConfig {
  std::string name;
  ScorerKind kind = ScorerKind::kAlignment;
  std::string url;  // full URL of the scoring endpoint
  std::string version = "1";
  int timeout_seconds = 120;
  RetryPolicy retry;
};

/// POSTs {"scorer", "prompt", "image_base64"} and reads {"value"}.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(HttpScorerConfig config);
  ~HttpScorer() override;

  const std::string& name() const override { return config_.name; }
  const std::string& version() const override { return config_.version; }
  ScorerKind kind() const override { return config_.kind; }
  ScoreValue score(const ScoreInput& input) const override;

 private:
  struct Client;
  HttpScorerConfig config_;
  std::unique_ptr<Client> client_;
};

struct JudgeClientConfig {
  std::string name = "judge";
  /// OpenAI-compatible chat-completions URL.
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "CRETOK_JUDGE_API_KEY";
  std::optional<double> temperature;
  std::string version = "1";
  int timeout_seconds = 120;
  RetryPolicy retry;
};

/// LLM judge: sends the rubric plus the image, parses the reply.
class JudgeScorer final : public Scorer {
 public:
  explicit JudgeScorer(JudgeClientConfig config);
  ~JudgeScorer() override;

  const std::string& name() const override { return config_.name; }
  const std::string& version() const override { return version_; }
  ScorerKind kind() const override { return ScorerKind::kJudge; }
  ScoreValue score(const ScoreInput& input) const override;

  /// Raw reply text for one image.
  std::string ask(std::string_view t1, std::string_view t2, std::span<const std::uint8_t> png) const;

 private:
  struct Client;
  JudgeClientConfig config_;
  std::string version_;
  std::string api_key_;
  std::unique_ptr<Client> client_;
};

/// Builds scorers from JSON:
///   {"scorers": [{"type": "stub", "name": "VQAScore", "kind": "alignment", "fixed": 0.5},
///                {"type": "http", "name": "PickScore", "kind": "preference-pick", "url": "..."},
///                {"type": "judge", "model": "gpt-4o", "url": "..."}]}
std::vector<std::unique_ptr<Scorer>> parse_scorer_config(std::string_view json_text);
std::vector<std::unique_ptr<Scorer>> load_scorer_config(const std::filesystem::path& path);
/// VQAScore / PickScore / ImageReward / judge stubs.
std::vector<std::unique_ptr<Scorer>> default_stub_scorers();

/// On-disk response cache keyed by (input hash, scorer name, scorer version).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(const ScoreInput& input, const Scorer& scorer);
  std::optional<ScoreValue> get(const std::string& key) const;
  void put(const std::string& key, const ScoreValue& value) const;

 private:
  std::filesystem::path dir_;
};

struct ScoreRecord {
  std::string image_id;
  std::string method;
  std::string prompt;
  std::string scorer;
  ScorerKind kind = ScorerKind::kAlignment;
  bool ok = false;
  std::optional<double> value;
  std::optional<JudgeScores> judge;
  std::string reason;  // failure reason, empty when ok
};

inline constexpr std::string_view kRecordsHeader =
    "image_id,method,prompt,scorer,kind,status,value,integration,alignment,originality,aesthetics,comprehensive,"
    "reason";

std::string serialize_records(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_records(std::string_view text, std::string_view source = "records");
std::vector<ScoreRecord> read_records(const std::filesystem::path& path);

struct ScoreOptions {
  std::string method = "CreTok";
  std::size_t workers = 1;
  const ResponseCache* cache = nullptr;
};

/// One record per (manifest row, scorer), in manifest order. Unreadable
/// images and scorer errors yield failed records; the run continues.
std::vector<ScoreRecord> score_images(std::span<const generation::ManifestRow> manifest,
                                      const std::filesystem::path& manifest_dir,
                                      std::span<const Scorer* const> scorers, const ScoreOptions& options = {});

struct MeanStd {
  double mean = 0;
  double std = 0;  // population
  std::size_t n = 0;

  /// "0.850±0.050" with `precision` decimals.
  std::string format(int precision) const;
};

/// Throws kEmptyGroup on no values.
MeanStd mean_std(std::span<const double> values);

struct Aggregate {
  std::string method;
  std::string metric;  // scorer name, or a judge criterion name
  ScorerKind kind = ScorerKind::kAlignment;
  MeanStd stats;
};

/// Groups successful records by (method, metric). A group whose records all
/// failed throws kEmptyGroup.
std::vector<Aggregate> aggregate_scores(std::span<const ScoreRecord> records);

/// Method order used for every table column.
inline const std::vector<std::string> kTableMethods{"SD3", "SD3.5", "Kand3", "BASS", "CreTok"};

struct RankingRecord {
  std::string participant;
  std::string pair_first;
  std::string pair_second;
  std::map<std::string, int> ranks;  // method -> rank

  /// Throws kInvalidRanking unless ranks are exactly 1..M.
  void validate() const;
};

inline constexpr std::string_view kRankingHeader = "participant,pair_first,pair_second,method,rank";

/// Long format: one row per (record, method), methods in rank order.
std::string serialize_rankings(std::span<const RankingRecord> records);
/// Rows are grouped by (participant, pair) in first-appearance order; every
/// record is validated.
std::vector<RankingRecord> parse_rankings(std::string_view text, std::string_view source = "rankings");
std::vector<RankingRecord> read_rankings(const std::filesystem::path& path);

struct PairRanks {
  std::string pair_first;
  std::string pair_second;
  std::size_t responses = 0;
  std::map<std::string, double> mean_rank;
};

struct RankingSummary {
  std::vector<std::string> methods;
  std::vector<PairRanks> per_pair;  // first-appearance order
  std::map<std::string, MeanStd> overall;
  std::size_t records = 0;
};

/// Per-pair means and overall mean/std over all records. Methods must be
/// the same for every record (kInvalidRanking otherwise).
RankingSummary aggregate_rankings(std::span<const RankingRecord> records);

/// Known methods in table order, then the rest alphabetically.
std::vector<std::string> order_methods(std::vector<std::string> methods);

}  // namespace cretok::eval

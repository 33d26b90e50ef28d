#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cretok/evaluation.hpp"

namespace cretok::study {

/// One text pair with one image per method.
struct StudyItem {
  std::string pair_id;
  std::string pair_first;
  std::string pair_second;
  std::map<std::string, std::string> images;  // method -> URL
};

/// CSV with header `pair_id,pair_first,pair_second,method,image_url`.
std::vector<StudyItem> parse_items(std::string_view text, std::string_view source = "items");
std::vector<StudyItem> read_items(const std::filesystem::path& path);

struct StudyConfig {
  std::vector<StudyItem> items;
  std::chrono::seconds ttl{std::chrono::hours(72)};
  /// Unset: shuffles and session ids come from std::random_device.
  std::optional<std::uint64_t> seed;
  std::string caption = "a creative mixture of {t1} and {t2}";
};

struct AssignmentImage {
  std::string label;  // opaque, unique per assignment
  std::string url;
};

struct Assignment {
  std::string pair_id;
  std::string caption;
  std::size_t index = 0;  // 0-based position in the session
  std::size_t total = 0;
  std::vector<AssignmentImage> images;
};

struct NextResult {
  bool complete = false;
  std::optional<Assignment> assignment;
};

struct SessionInfo {
  std::string session_id;
  std::string participant;
  std::size_t total = 0;
};

struct Ack {
  std::string pair_id;
  std::size_t remaining = 0;
};

/// User-study collection. Every state change is appended to a
/// newline-delimited JSON log that is replayed on construction, so a
/// restarted service resumes where it stopped. Thread-safe; all writes go
/// through one mutex.
class StudyService {
 public:
  using Clock = std::function<std::int64_t()>;  // seconds since epoch

  StudyService(StudyConfig config, std::filesystem::path store, Clock clock = {});
  ~StudyService();

  SessionInfo open_session(const std::string& participant);
  /// Idempotent: the first pair without a submission, or completion.
  NextResult next(const std::string& session_id) const;
  /// `ranks[i]` is the rank of the i-th image of the pair's assignment.
  Ack submit(const std::string& session_id, const std::string& pair_id, const std::vector<int>& ranks);
  void close(const std::string& session_id);

  /// Long-format ranking CSV of every accepted submission in arrival order.
  std::string export_csv() const;
  std::vector<eval::RankingRecord> records() const;
  std::size_t accepted() const;

 private:
  struct Slot {
    std::string pair_id;
    std::vector<std::string> methods;  // display order
    std::vector<std::string> labels;
  };
  struct Session {
    std::string id;
    std::string participant;
    std::int64_t created = 0;
    bool closed = false;
    std::vector<Slot> order;
    std::set<std::string> submitted;
  };

  const Session& live_session(const std::string& id) const;
  void append(const std::string& line);
  void replay();
  std::string random_hex(std::size_t bytes);
  Assignment assignment_for(const Session& s, std::size_t index) const;

  StudyConfig config_;
  std::filesystem::path store_;
  Clock clock_;
  std::map<std::string, const StudyItem*> items_;
  std::map<std::string, Session> sessions_;
  std::set<std::pair<std::string, std::string>> done_;  // (participant, pair)
  std::vector<eval::RankingRecord> accepted_;
  std::ofstream log_;
  std::uint64_t draws_ = 0;
  mutable std::mutex mu_;
};

/// JSON-over-HTTP front end:
///   POST /api/sessions                 {"participant"} -> {"session_id", "participant", "total"}
///   GET  /api/sessions/{id}/next       -> {"complete", "assignment"?}
///   POST /api/sessions/{id}/rankings   {"pair_id", "ranks": [..]} -> {"accepted", "pair_id", "remaining"}
///   GET  /api/export                   -> ranking CSV
/// plus static files under each mount's URL prefix. Errors are
/// {"error": <code name>, "message"} with a matching HTTP status.
class StudyServer {
 public:
  struct Mount {
    std::string prefix;  // e.g. "/images"
    std::filesystem::path dir;
  };

  StudyServer(StudyService& service, std::vector<Mount> mounts = {});
  ~StudyServer();

  /// Binds and returns the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cretok::study

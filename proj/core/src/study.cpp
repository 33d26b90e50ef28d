#include "cretok/study.hpp"

#include <httplib.h>

#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cretok/error.hpp"
#include "cretok/io.hpp"
#include "cretok/rng.hpp"

namespace cretok::study {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<StudyItem> parse_items(std::string_view text, std::string_view source) {
  const auto table = io::parse_csv(text, source);
  if (io::csv_join(table.header) != "pair_id,pair_first,pair_second,method,image_url")
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": unexpected study items header");
  std::vector<StudyItem> items;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    auto [it, fresh] = index.try_emplace(f[0], items.size());
    if (fresh) items.push_back({f[0], f[1], f[2], {}});
    if (!items[it->second].images.emplace(f[3], f[4]).second) {
      throw Error(ErrorCode::kMalformedRecord,
                  fmt::format("{}:{}: method {} listed twice for pair {}", source, table.lines[i], f[3], f[0]));
    }
  }
  return items;
}

std::vector<StudyItem> read_items(const fs::path& path) { return parse_items(io::read_file(path), path.string()); }

namespace {

std::int64_t system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

StudyService::StudyService(StudyConfig config, fs::path store, Clock clock)
    : config_(std::move(config)), store_(std::move(store)), clock_(clock ? std::move(clock) : Clock(system_now)) {
  if (config_.items.empty()) throw Error(ErrorCode::kInvalidArgument, "study has no items");
  const std::size_t m = config_.items.front().images.size();
  for (const auto& item : config_.items) {
    if (item.images.size() != m || m < 2)
      throw Error(ErrorCode::kInvalidArgument, "every study pair needs the same number (>= 2) of method images");
    if (!items_.emplace(item.pair_id, &item).second)
      throw Error(ErrorCode::kInvalidArgument, "duplicate study pair id '" + item.pair_id + "'");
  }
  if (!config_.seed) {
    std::random_device rd;
    config_.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  if (store_.has_parent_path()) fs::create_directories(store_.parent_path());
  replay();
  log_.open(store_, std::ios::app | std::ios::binary);
  if (!log_) throw Error(ErrorCode::kIo, "cannot open study store " + store_.string());
}

StudyService::~StudyService() = default;

std::string StudyService::random_hex(std::size_t bytes) {
  std::uint64_t state = *config_.seed ^ (0x9e3779b97f4a7c15ULL * ++draws_);
  std::string out;
  while (out.size() < 2 * bytes) out += fmt::format("{:016x}", splitmix64(state));
  return out.substr(0, 2 * bytes);
}

void StudyService::replay() {
  if (!fs::exists(store_)) return;
  std::istringstream in(io::read_file(store_));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::exception&) {
      if (in.peek() == EOF) break;  // torn final write
      throw Error(ErrorCode::kMalformedRecord, fmt::format("{}:{}: corrupt study record", store_.string(), line_no));
    }
    const std::string kind = ev.at("event");
    if (kind == "open") {
      Session s;
      s.id = ev.at("session");
      s.participant = ev.at("participant");
      s.created = ev.at("created");
      for (const auto& slot : ev.at("order"))
        s.order.push_back({slot.at("pair_id"), slot.at("methods").get<std::vector<std::string>>(),
                           slot.at("labels").get<std::vector<std::string>>()});
      sessions_[s.id] = std::move(s);
    } else if (kind == "submit") {
      auto& s = sessions_.at(ev.at("session").get<std::string>());
      const std::string pair_id = ev.at("pair_id");
      const auto* item = items_.at(pair_id);
      s.submitted.insert(pair_id);
      done_.insert({s.participant, pair_id});
      accepted_.push_back({s.participant, item->pair_first, item->pair_second,
                           ev.at("ranks").get<std::map<std::string, int>>()});
    } else if (kind == "close") {
      sessions_.at(ev.at("session").get<std::string>()).closed = true;
    }
  }
  draws_ = 1000003ULL * (sessions_.size() + accepted_.size() + 1);
}

void StudyService::append(const std::string& line) {
  log_ << line << '\n';
  log_.flush();
  if (!log_) throw Error(ErrorCode::kIo, "write to study store " + store_.string() + " failed");
}

const StudyService::Session& StudyService::live_session(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "unknown session '" + id + "'");
  if (it->second.closed) throw Error(ErrorCode::kSessionClosed, "session '" + id + "' is closed");
  if (clock_() - it->second.created > config_.ttl.count())
    throw Error(ErrorCode::kSessionClosed, "session '" + id + "' has expired");
  return it->second;
}

SessionInfo StudyService::open_session(const std::string& participant) {
  if (participant.find_first_not_of(" \t") == std::string::npos)
    throw Error(ErrorCode::kInvalidArgument, "participant id is empty");
  std::lock_guard lock(mu_);
  Session s;
  s.id = random_hex(16);
  s.participant = participant;
  s.created = clock_();
  Rng rng(*config_.seed ^ fnv1a64(s.id));
  std::vector<const StudyItem*> items;
  for (const auto& item : config_.items) items.push_back(&item);
  shuffle(items, rng);
  json order = json::array();
  for (const auto* item : items) {
    Slot slot{item->pair_id, {}, {}};
    for (const auto& [method, url] : item->images) slot.methods.push_back(method);
    shuffle(slot.methods, rng);
    std::set<std::string> used;
    while (slot.labels.size() < slot.methods.size()) {
      std::string label = fmt::format("{:08x}", static_cast<std::uint32_t>(rng.next_u64()));
      if (used.insert(label).second) slot.labels.push_back(label);
    }
    order.push_back({{"pair_id", slot.pair_id}, {"methods", slot.methods}, {"labels", slot.labels}});
    s.order.push_back(std::move(slot));
  }
  append(json{{"event", "open"}, {"session", s.id}, {"participant", participant}, {"created", s.created}, {"order", order}}
             .dump());
  SessionInfo info{s.id, participant, s.order.size()};
  sessions_[s.id] = std::move(s);
  return info;
}

Assignment StudyService::assignment_for(const Session& s, std::size_t index) const {
  const Slot& slot = s.order[index];
  const StudyItem& item = *items_.at(slot.pair_id);
  Assignment a;
  a.pair_id = slot.pair_id;
  a.caption = config_.caption;
  if (auto p = a.caption.find("{t1}"); p != std::string::npos) a.caption.replace(p, 4, item.pair_first);
  if (auto p = a.caption.find("{t2}"); p != std::string::npos) a.caption.replace(p, 4, item.pair_second);
  a.index = index;
  a.total = s.order.size();
  for (std::size_t i = 0; i < slot.methods.size(); ++i) a.images.push_back({slot.labels[i], item.images.at(slot.methods[i])});
  return a;
}

NextResult StudyService::next(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const Session& s = live_session(session_id);
  for (std::size_t i = 0; i < s.order.size(); ++i) {
    if (!s.submitted.count(s.order[i].pair_id)) return {false, assignment_for(s, i)};
  }
  return {true, std::nullopt};
}

Ack StudyService::submit(const std::string& session_id, const std::string& pair_id, const std::vector<int>& ranks) {
  std::lock_guard lock(mu_);
  const Session& s = live_session(session_id);
  const auto slot_it = std::find_if(s.order.begin(), s.order.end(), [&](const Slot& x) { return x.pair_id == pair_id; });
  if (slot_it == s.order.end()) throw Error(ErrorCode::kUnknownPair, "pair '" + pair_id + "' is not in this session");
  if (s.submitted.count(pair_id) || done_.count({s.participant, pair_id}))
    throw Error(ErrorCode::kDuplicateSubmission, "pair '" + pair_id + "' already ranked by " + s.participant);
  if (ranks.size() != slot_it->methods.size()) {
    throw Error(ErrorCode::kInvalidRanking,
                fmt::format("expected {} ranks, got {}", slot_it->methods.size(), ranks.size()));
  }
  const StudyItem& item = *items_.at(pair_id);
  eval::RankingRecord rec{s.participant, item.pair_first, item.pair_second, {}};
  for (std::size_t i = 0; i < ranks.size(); ++i) rec.ranks[slot_it->methods[i]] = ranks[i];
  if (rec.ranks.size() != ranks.size())
    throw Error(ErrorCode::kInvalidRanking, "assignment lists a method twice");
  rec.validate();

  append(json{{"event", "submit"}, {"session", session_id}, {"pair_id", pair_id}, {"ranks", rec.ranks}}.dump());
  Session& mutable_s = sessions_.at(session_id);
  mutable_s.submitted.insert(pair_id);
  done_.insert({s.participant, pair_id});
  accepted_.push_back(std::move(rec));
  return {pair_id, s.order.size() - s.submitted.size()};
}

void StudyService::close(const std::string& session_id) {
  std::lock_guard lock(mu_);
  live_session(session_id);
  append(json{{"event", "close"}, {"session", session_id}}.dump());
  sessions_.at(session_id).closed = true;
}

std::string StudyService::export_csv() const {
  std::lock_guard lock(mu_);
  return eval::serialize_rankings(accepted_);
}

std::vector<eval::RankingRecord> StudyService::records() const {
  std::lock_guard lock(mu_);
  return accepted_;
}

std::size_t StudyService::accepted() const {
  std::lock_guard lock(mu_);
  return accepted_.size();
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownPair: return 404;
    case ErrorCode::kDuplicateSubmission: return 409;
    case ErrorCode::kSessionClosed: return 410;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_json(res, http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", "InvalidArgument"}, {"message", std::string("bad request body: ") + e.what()}});
  }
}

}  // namespace

struct StudyServer::Impl {
  StudyService& service;
  httplib::Server http;
  explicit Impl(StudyService& s) : service(s) {}
};

StudyServer::StudyServer(StudyService& service, std::vector<Mount> mounts) : impl_(std::make_unique<Impl>(service)) {
  auto& http = impl_->http;
  auto& svc = impl_->service;
  for (const auto& m : mounts) {
    if (!http.set_mount_point(m.prefix, m.dir.string()))
      throw Error(ErrorCode::kIo, "cannot serve " + m.dir.string() + " at " + m.prefix);
  }
  http.Post("/api/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = req.body.empty() ? json::object() : json::parse(req.body);
      const auto info = svc.open_session(body.at("participant").get<std::string>());
      send_json(res, 201, {{"session_id", info.session_id}, {"participant", info.participant}, {"total", info.total}});
    });
  });
  http.Get(R"(/api/sessions/([0-9a-f]+)/next)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto next = svc.next(req.matches[1]);
      json body{{"complete", next.complete}};
      if (next.assignment) {
        const auto& a = *next.assignment;
        json images = json::array();
        for (const auto& img : a.images) images.push_back({{"label", img.label}, {"url", img.url}});
        body["assignment"] = {{"pair_id", a.pair_id}, {"caption", a.caption}, {"index", a.index},
                              {"total", a.total},     {"images", images}};
      }
      send_json(res, 200, body);
    });
  });
  http.Post(R"(/api/sessions/([0-9a-f]+)/rankings)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto ack = svc.submit(req.matches[1], body.at("pair_id").get<std::string>(),
                                  body.at("ranks").get<std::vector<int>>());
      send_json(res, 200, {{"accepted", true}, {"pair_id", ack.pair_id}, {"remaining", ack.remaining}});
    });
  });
  http.Get("/api/export", [&svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(svc.export_csv(), "text/csv");
  });
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  if (!impl_->http.bind_to_port(host, port))
    throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void StudyServer::serve() { impl_->http.listen_after_bind(); }

void StudyServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace cretok::study

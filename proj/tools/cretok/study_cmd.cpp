#include <csignal>
#include <iostream>
#include <map>

#include <fmt/format.h>

#include "common.hpp"
#include "cretok/corpus.hpp"
#include "cretok/generation.hpp"
#include "cretok/io.hpp"
#include "cretok/study.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

namespace {

struct StudyArgs {
  std::string items;
  std::vector<std::string> manifests;  // METHOD=PATH
  std::string store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> seed;
  double ttl_hours = 72;
  std::string ui;
  std::string caption;
  std::string out;
};

struct Items {
  std::vector<study::StudyItem> items;
  std::vector<study::StudyServer::Mount> mounts;
};

fs::path items_sidecar(const fs::path& store) { return fs::path(store.string() + ".items.csv"); }

std::string serialize_items(const std::vector<study::StudyItem>& items) {
  std::string out = "pair_id,pair_first,pair_second,method,image_url\n";
  for (const auto& it : items)
    for (const auto& [method, url] : it.images)
      out += io::csv_join({it.pair_id, it.pair_first, it.pair_second, method, url}) + "\n";
  return out;
}

Items items_from_manifests(const std::vector<std::string>& specs) {
  Items out;
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> urls;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--manifest expects METHOD=PATH, got '" + spec + "'");
    const std::string method = spec.substr(0, eq);
    const fs::path path = spec.substr(eq + 1);
    const std::string prefix = "/images/" + method;
    out.mounts.push_back({prefix, path.parent_path().empty() ? fs::path(".") : path.parent_path()});
    for (const auto& row : generation::read_manifest(path)) {
      const auto key = corpus::TextPair::make(row.pair_first, row.pair_second);
      const std::pair<std::string, std::string> k{key.first, key.second};
      auto& per_method = urls[k];
      if (per_method.empty()) order.push_back(k);
      per_method.try_emplace(method, prefix + "/" + row.image_path);
    }
  }
  for (const auto& k : order) {
    const auto& per_method = urls.at(k);
    if (per_method.size() != specs.size()) continue;  // only pairs every method rendered
    out.items.push_back({fmt::format("{:02d}", out.items.size() + 1), k.first, k.second, per_method});
  }
  return out;
}

Items resolve_items(const StudyArgs& a, bool for_export) {
  if (!a.items.empty() && !a.manifests.empty()) throw UsageError("--items and --manifest are mutually exclusive");
  if (!a.items.empty()) return {study::read_items(a.items), {}};
  if (!a.manifests.empty()) return items_from_manifests(a.manifests);
  if (for_export && fs::exists(items_sidecar(a.store))) return {study::read_items(items_sidecar(a.store)), {}};
  throw UsageError("give --items or at least one --manifest METHOD=PATH");
}

study::StudyServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const StudyArgs& a) {
  Items items = resolve_items(a, false);
  if (items.items.empty()) throw UsageError("no study pairs: every method must render the same pairs");
  study::StudyConfig config;
  config.items = items.items;
  config.seed = a.seed;
  config.ttl = std::chrono::seconds(static_cast<std::int64_t>(a.ttl_hours * 3600));
  if (!a.caption.empty()) config.caption = a.caption;
  io::write_file_atomic(items_sidecar(a.store), serialize_items(items.items));
  study::StudyService service(config, a.store);
  auto mounts = items.mounts;
  if (!a.ui.empty()) mounts.push_back({"/", a.ui});
  study::StudyServer server(service, mounts);
  const int port = server.bind(a.host, a.port);
  write_run_manifest(fs::path(a.store).parent_path().empty() ? fs::path(".") : fs::path(a.store).parent_path(),
                     "study-serve", {{"store", a.store}, {"pairs", items.items.size()}, {"port", port}},
                     a.seed.value_or(0));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << fmt::format("study service on http://{}:{} ({} pairs, {} accepted so far)\n", a.host, port,
                           items.items.size(), service.accepted())
            << std::flush;
  server.serve();
  g_server = nullptr;
  return 0;
}

int run_export(const StudyArgs& a) {
  Items items = resolve_items(a, true);
  study::StudyConfig config;
  config.items = items.items;
  config.seed = 0;
  study::StudyService service(config, a.store);
  const std::string csv = service.export_csv();
  if (a.out.empty() || a.out == "-") {
    std::cout << csv;
  } else {
    io::write_file_atomic(a.out, csv);
    std::cerr << fmt::format("{} submission(s) exported to {}\n", service.accepted(), a.out);
  }
  return 0;
}

}  // namespace

void add_study(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<StudyArgs>();
  auto* serve = app.add_subcommand("study-serve", "Run the user-study collection service");
  serve->add_option("--items", a->items, "study items CSV")->check(CLI::ExistingFile);
  serve->add_option("--manifest", a->manifests, "METHOD=PATH generation manifest (repeatable)");
  serve->add_option("--store", a->store, "append-only submission log")->required();
  serve->add_option("--host", a->host, "bind address");
  serve->add_option("--port", a->port, "port (0: any free port)");
  serve->add_option("--seed", a->seed, "fixed shuffle seed (default: random)");
  serve->add_option("--ttl-hours", a->ttl_hours, "session lifetime in hours");
  serve->add_option("--ui", a->ui, "static directory served at /")->check(CLI::ExistingDirectory);
  serve->add_option("--caption", a->caption, "caption template with {t1} and {t2}");
  serve->callback([&action, a] { action = [a] { return run_serve(*a); }; });

  auto* exp = app.add_subcommand("study-export", "Export accepted rankings as CSV");
  exp->add_option("--store", a->store, "submission log")->required()->check(CLI::ExistingFile);
  exp->add_option("--items", a->items, "study items CSV (default: the sidecar written by study-serve)")
      ->check(CLI::ExistingFile);
  exp->add_option("--manifest", a->manifests, "METHOD=PATH generation manifest (repeatable)");
  exp->add_option("--out", a->out, "output CSV (default: stdout)");
  exp->callback([&action, a] { action = [a] { return run_export(*a); }; });
}

}  // namespace cretok::cli

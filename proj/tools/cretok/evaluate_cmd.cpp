#include <iostream>

#include <fmt/format.h>

#include "common.hpp"
#include "cretok/evaluation.hpp"
#include "cretok/io.hpp"
#include "cretok/judge.hpp"
#include "cretok/report.hpp"
#include "cretok/trainer.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

namespace {

struct EvaluateArgs {
  std::string manifest;
  std::string scorers;
  std::string method = "CreTok";
  std::string out;
  std::string cache;
  std::size_t workers = 1;
};

int run_evaluate(const EvaluateArgs& a) {
  const fs::path manifest(a.manifest);
  const fs::path scorer_path = a.scorers.empty() ? data_dir() / "scorers_stub.json" : fs::path(a.scorers);
  const auto owned = eval::load_scorer_config(scorer_path);
  std::vector<const eval::Scorer*> scorers;
  for (const auto& s : owned) scorers.push_back(s.get());

  std::optional<eval::ResponseCache> cache;
  if (!a.cache.empty()) cache.emplace(a.cache);
  eval::ScoreOptions options{a.method, a.workers, cache ? &*cache : nullptr};
  const auto rows = generation::read_manifest(manifest);
  const auto records = eval::score_images(rows, manifest.parent_path(), scorers, options);

  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_file_atomic(out, eval::serialize_records(records));
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok ? 0 : 1;
  nlohmann::json cfg{{"manifest", a.manifest}, {"scorers", scorer_path.string()}, {"method", a.method}};
  write_run_manifest(out.parent_path().empty() ? fs::path(".") : out.parent_path(), "evaluate", cfg, 0);
  std::cout << fmt::format("{} record(s), {} failed, written to {}\n", records.size(), failed, out.string());
  return 0;
}

struct JudgeArgs {
  std::string t1;
  std::string t2;
  std::string response;
};

int run_judge_prompt(const JudgeArgs& a) {
  std::cout << eval::judge_prompt(a.t1, a.t2) << "\n";
  return 0;
}

int run_judge_parse(const JudgeArgs& a) {
  const auto outcome = eval::try_parse_judge(io::read_file(a.response));
  if (!outcome.scores) {
    std::cerr << "error [" << to_string(outcome.error) << "]: " << outcome.message << "\n";
    return 1;
  }
  const auto v = outcome.scores->values();
  nlohmann::json doc;
  for (std::size_t i = 0; i < v.size(); ++i) doc[std::string(eval::JudgeScores::kNames[i])] = v[i];
  std::cout << doc.dump(2) << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> records;
  std::string rankings;
  std::vector<std::string> runs;
  std::string out;
};

int run_report(const ReportArgs& a) {
  eval::ReportInputs inputs;
  std::vector<eval::ScoreRecord> records;
  for (const auto& path : a.records) {
    auto r = eval::read_records(path);
    records.insert(records.end(), r.begin(), r.end());
  }
  inputs.scores = eval::aggregate_scores(records);
  if (!a.rankings.empty()) inputs.rankings = eval::read_rankings(a.rankings);
  for (const auto& run : a.runs) {
    const fs::path dir(run);
    eval::TrainingCurve curve{dir.filename().string(), std::nullopt, eval::read_train_log(dir / "train_log.csv")};
    if (fs::exists(dir / "config.conf")) curve.theta = optim::load_training_config(dir / "config.conf").theta;
    inputs.curves.push_back(std::move(curve));
  }
  const auto out = eval::emit_report(inputs, a.out);
  for (const auto& f : out.files) std::cout << "wrote " << (fs::path(a.out) / f).string() << "\n";
  for (const auto& n : out.notices) std::cout << "note: " << n << "\n";
  nlohmann::json cfg{{"records", a.records}, {"rankings", a.rankings}, {"runs", a.runs}};
  write_run_manifest(a.out, "report", cfg, 0);
  return 0;
}

}  // namespace

void add_evaluate(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<EvaluateArgs>();
  auto* cmd = app.add_subcommand("evaluate", "Score rendered images with alignment, preference and judge scorers");
  cmd->add_option("--manifest", a->manifest, "generation manifest CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--scorers", a->scorers, "scorer config JSON (default: stub scorers)")->check(CLI::ExistingFile);
  cmd->add_option("--method", a->method, "method label written into every record");
  cmd->add_option("--out", a->out, "records CSV to write")->required();
  cmd->add_option("--cache", a->cache, "response cache directory");
  cmd->add_option("--workers", a->workers, "concurrent scoring workers")->check(CLI::PositiveNumber);
  cmd->callback([&action, a] { action = [a] { return run_evaluate(*a); }; });
}

void add_judge(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<JudgeArgs>();
  auto* cmd = app.add_subcommand("judge", "Print the judge rubric or parse a judge reply");
  cmd->require_subcommand(1);
  auto* prompt = cmd->add_subcommand("prompt", "Print the rubric for a concept pair");
  prompt->add_option("--t1", a->t1, "first concept")->required();
  prompt->add_option("--t2", a->t2, "second concept")->required();
  prompt->callback([&action, a] { action = [a] { return run_judge_prompt(*a); }; });
  auto* parse = cmd->add_subcommand("parse", "Extract the five scores from a reply");
  parse->add_option("--response", a->response, "reply text file")->required()->check(CLI::ExistingFile);
  parse->callback([&action, a] { action = [a] { return run_judge_parse(*a); }; });
}

void add_report(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<ReportArgs>();
  auto* cmd = app.add_subcommand("report", "Emit result tables and plots");
  cmd->add_option("--records", a->records, "score records CSV (repeatable)")->check(CLI::ExistingFile);
  cmd->add_option("--rankings", a->rankings, "user-study ranking CSV")->check(CLI::ExistingFile);
  cmd->add_option("--run", a->runs, "training run directory (repeatable)")->check(CLI::ExistingDirectory);
  cmd->add_option("--out", a->out, "report directory")->required();
  cmd->callback([&action, a] { action = [a] { return run_report(*a); }; });
}

}  // namespace cretok::cli

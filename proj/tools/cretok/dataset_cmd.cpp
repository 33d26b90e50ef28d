#include <iostream>

#include <fmt/format.h>

#include "common.hpp"
#include "cretok/corpus.hpp"
#include "cretok/io.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

namespace {

struct DatasetArgs {
  std::string train;
  std::string eval;
  std::string canonical_out;
};

int run_check(const DatasetArgs& a) {
  const fs::path train = a.train.empty() ? data_dir() / "cangjie_train.csv" : fs::path(a.train);
  const fs::path eval = a.eval.empty() ? data_dir() / "cangjie_eval.csv" : fs::path(a.eval);
  const auto eval_set = corpus::load_cangjie(eval);
  corpus::LoadOptions options;
  options.overlap_reference = eval_set.pairs;
  const auto train_set = corpus::load_cangjie(train, options);
  std::cout << fmt::format("training pairs: {}\nevaluation pairs: {}\n", train_set.pairs.size(), eval_set.pairs.size());
  for (const auto& v : train_set.report.ordering_violations) std::cout << "ordering: " << v << "\n";
  for (const auto& p : train_set.report.overlaps) std::cout << "overlap: " << p.label() << "\n";
  for (const auto& w : train_set.report.warnings) std::cout << "warning: " << w << "\n";
  const bool canonical = io::read_file(train) == corpus::serialize_cangjie(train_set.pairs);
  std::cout << "training file canonical: " << (canonical ? "yes" : "no") << "\n";
  if (!a.canonical_out.empty()) io::write_file_atomic(a.canonical_out, corpus::serialize_cangjie(train_set.pairs));
  return 0;
}

}  // namespace

void add_dataset(CLI::App& app, std::function<int()>& action) {
  auto a = std::make_shared<DatasetArgs>();
  auto* cmd = app.add_subcommand("dataset", "Inspect the concept-pair dataset");
  cmd->require_subcommand(1);
  auto* check = cmd->add_subcommand("check", "Validate the training and evaluation files");
  check->add_option("--train", a->train, "training pairs CSV")->check(CLI::ExistingFile);
  check->add_option("--eval", a->eval, "evaluation pairs CSV")->check(CLI::ExistingFile);
  check->add_option("--write-canonical", a->canonical_out, "write the canonical training CSV here");
  check->callback([&action, a] { action = [a] { return run_check(*a); }; });
}

}  // namespace cretok::cli

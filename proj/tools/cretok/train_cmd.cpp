#include <cstdio>
#include <iostream>

#include <fmt/format.h>

#include "common.hpp"
#include "cretok/corpus.hpp"
#include "cretok/io.hpp"
#include "cretok/report.hpp"
#include "cretok/trainer.hpp"

namespace cretok::cli {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config;
  std::string data;
  std::string eval;
  std::string templates;
  std::string encoders;
  std::string out;
  std::string theta;
  bool sweep = false;
  bool resume = false;
  bool quiet = false;
  std::size_t steps = 0;
  std::size_t accum = 0;
  double lr = 0;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;
  std::string schedule;
  std::string embedding;
  double max_norm = 0;
  bool paraphrases = false;
  bool with_replacement = false;
  std::string init = "seed-word";
  std::string marker = std::string(corpus::kDefaultMarker);
};

struct Flags {
  CLI::Option* steps;
  CLI::Option* accum;
  CLI::Option* lr;
  CLI::Option* seed;
  CLI::Option* snapshot_every;
  CLI::Option* schedule;
  CLI::Option* embedding;
  CLI::Option* max_norm;
  CLI::Option* paraphrases;
  CLI::Option* with_replacement;
};

std::string theta_dir(double theta) { return fmt::format("theta_{}", theta); }

int run_train(const TrainArgs& a, const Flags& f) {
  optim::TrainingConfig base = a.config.empty() ? optim::TrainingConfig{} : optim::load_training_config(a.config);
  if (f.steps->count()) base.steps = a.steps;
  if (f.accum->count()) base.n = a.accum;
  if (f.lr->count()) base.lr0 = a.lr;
  if (f.seed->count()) base.seed = a.seed;
  if (f.snapshot_every->count()) base.snapshot_every = a.snapshot_every;
  if (f.schedule->count()) base.schedule = a.schedule;
  if (f.embedding->count()) base.embedding = optim::parse_loss_embedding(a.embedding);
  if (f.max_norm->count()) base.max_norm = a.max_norm;
  if (f.paraphrases->count()) base.use_paraphrases = true;
  if (f.with_replacement->count()) base.with_replacement = true;

  std::vector<double> thetas = a.theta.empty() ? std::vector<double>{base.theta} : parse_doubles(a.theta);
  if (thetas.size() > 1 && !a.sweep) throw UsageError("several --theta values need --sweep");
  if (a.sweep && thetas.size() < 2) throw UsageError("--sweep needs at least two --theta values");
  if (a.sweep && a.resume) throw UsageError("--resume applies to a single run, not a sweep");
  if (a.init != "seed-word" && a.init != "gaussian") throw UsageError("--init must be seed-word or gaussian");
  for (double t : thetas) {
    optim::TrainingConfig c = base;
    c.theta = t;
    c.validate();
  }

  const fs::path data = a.data.empty() ? data_dir() / "cangjie_train.csv" : fs::path(a.data);
  const fs::path eval = a.eval.empty() ? data_dir() / "cangjie_eval.csv" : fs::path(a.eval);
  const auto eval_set = corpus::load_cangjie(eval);
  corpus::LoadOptions load;
  load.overlap_reference = eval_set.pairs;
  const auto train_set = corpus::load_cangjie(data, load);
  for (const auto& w : train_set.report.warnings) std::cerr << "warning: " << w << "\n";

  corpus::TemplatePool pool =
      a.templates.empty() ? corpus::TemplatePool::defaults(base.use_paraphrases) : corpus::TemplatePool::load(a.templates);
  if (base.use_paraphrases) pool.use_all_adaptive();

  std::vector<eval::TrainingCurve> curves;
  const fs::path root(a.out);
  for (double theta : thetas) {
    optim::TrainingConfig config = base;
    config.theta = theta;
    const fs::path dir = a.sweep ? root / theta_dir(theta) : root;
    fs::create_directories(dir);

    encoders::EncoderSet set = load_encoders(a.encoders);
    const std::string frozen_before = set.frozen_checksum();
    encoders::TokenInit init;
    init.policy = a.init == "gaussian" ? encoders::InitPolicy::kGaussian : encoders::InitPolicy::kSeedWord;
    init.seed_word = set.seed_word();
    init.seed = config.seed;
    auto token = set.inject(a.marker, init);

    optim::TrainOptions options;
    options.out_dir = dir;
    options.probe = eval_set.pairs;
    const std::size_t tick = std::max<std::size_t>(1, config.steps / 10);
    if (!a.quiet) {
      options.on_step = [&](std::int64_t step, double lr, double loss, double cos) {
        if (static_cast<std::size_t>(step) % tick == 0)
          std::cerr << fmt::format("[theta={}] step {}/{} lr={:.3g} loss={:.5f} mean_cos={:.5f}\n", theta, step,
                                   config.steps, lr, loss, cos);
      };
    }

    optim::Trainer trainer(set, pool, train_set.pairs, config);
    const auto result = a.resume ? trainer.resume(options) : trainer.run(trainer.initial_state(std::move(token)), options);
    const std::string frozen_after = set.frozen_checksum();
    if (frozen_after != frozen_before) throw Error(ErrorCode::kIo, "encoder weights changed during training");

    io::write_file_atomic(dir / "config.conf", optim::to_config_text(config));
    nlohmann::json cfg{{"training", optim::to_config_text(config)},
                       {"data", data.string()},
                       {"eval", eval.string()},
                       {"templates", a.templates.empty() ? "builtin" : a.templates},
                       {"encoders", a.encoders.empty() ? "builtin-toy" : a.encoders},
                       {"init", a.init},
                       {"marker", a.marker},
                       {"frozen_checksum", frozen_before}};
    write_run_manifest(dir, "train", cfg, config.seed);
    std::cout << fmt::format("theta={} final loss={:.6f} mean_cos={:.6f} checkpoint={}\n", theta,
                             result.state.loss_history.empty() ? 0.0 : result.state.loss_history.back(),
                             result.state.cos_history.empty() ? 0.0 : result.state.cos_history.back(),
                             result.final_checkpoint.string());
    curves.push_back({theta_dir(theta), theta, eval::read_train_log(dir / "train_log.csv")});
  }

  const auto plots = eval::emit_training_plots(curves, root);
  for (const auto& p : plots.files) std::cout << "wrote " << (root / p).string() << "\n";
  return 0;
}

}  // namespace

void add_train(CLI::App& app, std::function<int()>& action) {
  auto args = std::make_shared<TrainArgs>();
  auto flags = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("train", "Optimise the creative token over the training pairs");
  cmd->add_option("--config", args->config, "key = value training config file")->check(CLI::ExistingFile);
  cmd->add_option("--data", args->data, "training pairs CSV (default: bundled CangJie training set)");
  cmd->add_option("--eval", args->eval, "held-out pairs CSV used as the snapshot probe");
  cmd->add_option("--templates", args->templates, "template pool JSON")->check(CLI::ExistingFile);
  cmd->add_option("--encoders", args->encoders, "encoder config JSON (default: toy encoders)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args->out, "output directory")->required();
  cmd->add_option("--theta", args->theta, "clamp threshold, or a comma list with --sweep");
  cmd->add_flag("--sweep", args->sweep, "one run per --theta value plus an ablation plot");
  cmd->add_flag("--resume", args->resume, "continue from <out>/state.json");
  cmd->add_flag("--quiet", args->quiet, "no progress lines");
  flags->steps = cmd->add_option("--steps", args->steps, "optimiser updates");
  flags->accum = cmd->add_option("--accum", args->accum, "pairs accumulated per update (n)");
  flags->lr = cmd->add_option("--lr", args->lr, "initial learning rate");
  flags->seed = cmd->add_option("--seed", args->seed, "sampling seed");
  flags->snapshot_every = cmd->add_option("--snapshot-every", args->snapshot_every, "checkpoint interval in steps");
  flags->schedule = cmd->add_option("--schedule", args->schedule, "cosine or constant");
  flags->embedding = cmd->add_option("--embedding", args->embedding, "concatenated or per-backend-mean");
  flags->max_norm = cmd->add_option("--max-norm", args->max_norm, "clip each token vector to this norm (0: off)");
  flags->paraphrases = cmd->add_flag("--paraphrases", args->paraphrases, "sample among all adaptive templates");
  flags->with_replacement = cmd->add_flag("--with-replacement", args->with_replacement, "sample pairs with replacement");
  cmd->add_option("--init", args->init, "token initialisation: seed-word or gaussian");
  cmd->add_option("--marker", args->marker, "marker text");
  cmd->callback([&action, args, flags] { action = [args, flags] { return run_train(*args, *flags); }; });
}

}  // namespace cretok::cli

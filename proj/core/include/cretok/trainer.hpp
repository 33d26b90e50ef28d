#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cretok/corpus.hpp"
#include "cretok/encoders.hpp"
#include "cretok/objective.hpp"
#include "cretok/rng.hpp"

namespace cretok::optim {

struct TrainingConfig {
  double theta = 0.5;
  std::size_t n = 16;  // pairs per update (gradient accumulation count)
  std::size_t steps = 10000;
  double lr0 = 0.01;
  std::string schedule = "cosine";
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_norm = 0.0;  // 0 disables the optional per-vector norm clip
  bool with_replacement = false;
  bool use_paraphrases = false;
  LossEmbedding embedding = LossEmbedding::kConcatenated;
  std::size_t probe_pairs = 8;

  /// Throws kInvalidArgument on out-of-range fields.
  void validate() const;
};

/// `key = value` lines; '#' starts a comment. Unknown keys are rejected.
TrainingConfig parse_training_config(std::string_view text);
TrainingConfig load_training_config(const std::filesystem::path& path);
/// Canonical key=value rendering (sorted keys); also the config-hash input.
std::string to_config_text(const TrainingConfig& config);

/// lr0 * 0.5 * (1 + cos(pi * step / steps)) for 0 <= step <= steps.
double lr_at(std::size_t step, const TrainingConfig& config);

struct AdamState {
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

struct TrainingState {
  std::int64_t step = 0;
  encoders::TokenEmbedding token;
  std::vector<double> loss_history;  // per completed step
  std::vector<double> cos_history;   // per completed step, unclamped
  AdamState adam;
  std::string rng_state;
};

/// Exact (double precision) resume state; separate from the float32 checkpoints.
std::string serialize_state(const TrainingState& state);
TrainingState parse_state(std::string_view text);

struct Snapshot {
  std::int64_t step = 0;
  std::filesystem::path path;
  double probe_mean_cos = 0.0;
};

struct TrainResult {
  TrainingState state;
  std::vector<Snapshot> snapshots;
  std::filesystem::path final_checkpoint;
};

struct TrainOptions {
  /// Output directory; empty keeps everything in memory.
  std::filesystem::path out_dir;
  /// Fixed held-out pairs probed at each snapshot.
  std::vector<corpus::TextPair> probe;
  /// Called after each step with (step, lr, loss, mean_cos).
  std::function<void(std::int64_t, double, double, double)> on_step;
};

/// Output layout under `out_dir`:
///   train_log.csv          step,lr,loss,mean_cos (one row per update)
///   snapshots/step_NNNNNN.json  checkpoints at step 0 and every snapshot_every
///   snapshots.csv          step,checkpoint,probe_mean_cos
///   state.json             exact resume state at the latest snapshot
///   checkpoint.json        final checkpoint
class Trainer {
 public:
  Trainer(const encoders::EncoderSet& encoders, const corpus::TemplatePool& templates,
          std::vector<corpus::TextPair> dataset, TrainingConfig config);

  const TrainingConfig& config() const { return config_; }
  const Objective& objective() const { return objective_; }

  TrainingState initial_state(encoders::TokenEmbedding token) const;

  /// Runs from `state.step` to `config.steps`. On a non-finite loss or
  /// gradient the last good token is written as a snapshot and
  /// kNonFiniteLoss is thrown.
  TrainResult run(TrainingState state, const TrainOptions& options) const;

  /// Loads `out_dir/state.json` and continues; the log is rewritten from the
  /// saved histories, so a resumed run matches an uninterrupted one.
  TrainResult resume(const TrainOptions& options) const;

 private:
  void update(TrainingState& state, const LossEval& eval, double lr) const;

  const encoders::EncoderSet& encoders_;
  const corpus::TemplatePool& templates_;
  std::vector<corpus::TextPair> dataset_;
  TrainingConfig config_;
  Objective objective_;
};

/// Convenience wrapper: inject the marker, train, return the result.
TrainResult train(std::span<const corpus::TextPair> dataset, const TrainingConfig& config,
                  encoders::EncoderSet& encoders, const corpus::TemplatePool& templates,
                  const TrainOptions& options = {},
                  const encoders::TokenInit& init = {},
                  std::string_view marker = corpus::kDefaultMarker);

}  // namespace cretok::optim

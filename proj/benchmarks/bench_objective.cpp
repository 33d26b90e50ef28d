#include <benchmark/benchmark.h>

#include <filesystem>

#include "cretok/backend_config.hpp"
#include "cretok/corpus.hpp"
#include "cretok/objective.hpp"
#include "cretok/rng.hpp"
#include "cretok/trainer.hpp"

namespace {

using namespace cretok;

const std::vector<corpus::TextPair>& training_pairs() {
  static const auto pairs =
      corpus::load_cangjie(std::filesystem::path(CRETOK_DATA_DIR) / "cangjie_train.csv").pairs;
  return pairs;
}

void BM_PairLoss(benchmark::State& state) {
  auto set = encoders::default_toy_encoders();
  auto token = set.inject(corpus::kDefaultMarker);
  const auto pool = corpus::TemplatePool::defaults();
  optim::Objective obj(set, pool, {0.5});
  const auto& pair = training_pairs().front();
  for (auto _ : state) benchmark::DoNotOptimize(obj.pair_loss(pair, token, nullptr, true));
}
BENCHMARK(BM_PairLoss);

// One update's worth of loss and gradient over n sampled pairs.
void BM_IterationLoss(benchmark::State& state) {
  auto set = encoders::default_toy_encoders();
  auto token = set.inject(corpus::kDefaultMarker);
  const auto pool = corpus::TemplatePool::defaults();
  optim::Objective obj(set, pool, {0.5});
  Rng rng(3);
  const auto batch = corpus::sample_pairs(training_pairs(), static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(obj.iteration_loss(batch, token, {}, true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IterationLoss)->Arg(16)->Arg(64);

void BM_ToyPooled(benchmark::State& state) {
  auto set = encoders::default_toy_encoders();
  auto token = set.inject(corpus::kDefaultMarker);
  const auto* backend = set.trainable().front();
  const std::string prompt = "a photo of a <CreTok> mixture.";
  for (auto _ : state) benchmark::DoNotOptimize(backend->pooled(prompt, token.vectors.front().values));
}
BENCHMARK(BM_ToyPooled);

void BM_TrainSteps(benchmark::State& state) {
  optim::TrainingConfig config;
  config.steps = 100;
  config.snapshot_every = 100;
  const auto pool = corpus::TemplatePool::defaults();
  for (auto _ : state) {
    auto set = encoders::default_toy_encoders();
    benchmark::DoNotOptimize(optim::train(training_pairs(), config, set, pool));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainSteps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

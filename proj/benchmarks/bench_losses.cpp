#include <benchmark/benchmark.h>

#include <vector>

#include "cretok/losses.hpp"
#include "cretok/rng.hpp"

namespace {

std::vector<double> random_vector(cretok::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void BM_CosineGrad(benchmark::State& state) {
  cretok::Rng rng(7);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(rng, n);
  const auto b = random_vector(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(cretok::optim::cosine_grad(a, b));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CosineGrad)->Arg(12)->Arg(2048);

void BM_ClampedMixLoss(benchmark::State& state) {
  cretok::Rng rng(11);
  const auto a = random_vector(rng, 2048);
  const auto b = random_vector(rng, 2048);
  for (auto _ : state) benchmark::DoNotOptimize(cretok::optim::clamped_mix_loss(a, b, 0.5));
}
BENCHMARK(BM_ClampedMixLoss);

}  // namespace

#include <benchmark/benchmark.h>

#include <random>

#include "kprune/ops.hpp"

using namespace kprune;

namespace {

Tensor random_tensor(Shape shape, unsigned seed) {
  Tensor t(std::move(shape));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& x : t.data()) x = u(rng);
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({c, 32, 32}, 1), w = random_tensor({c, c, 3, 3}, 2), b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DepthwiseConv(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({c, 16, 16}, 1), w = random_tensor({c, 1, 3, 3}, 2), b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1, c));
}
BENCHMARK(BM_DepthwiseConv)->Arg(64)->Arg(256);

void BM_Linear(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({256, d}, 1), w = random_tensor({d, d}, 2), b = random_tensor({d}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::linear(x, w, b));
}
BENCHMARK(BM_Linear)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor q = random_tensor({n, 64}, 1), k = random_tensor({n, 64}, 2), v = random_tensor({n, 64}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::attention(q, k, v, 2));
}
BENCHMARK(BM_Attention)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

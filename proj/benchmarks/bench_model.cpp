#include <benchmark/benchmark.h>

#include "kprune/forward.hpp"
#include "kprune/profiler.hpp"
#include "kprune/pruner.hpp"
#include "kprune/scenegen.hpp"
#include "kprune/toyformer.hpp"

using namespace kprune;

namespace {

const ModelGraph& base() {
  static const ModelGraph m = build_toyformer();
  return m;
}

void BM_Forward(benchmark::State& state) {
  const Tensor img = generate_scene(SceneSpec{}).image;
  for (auto _ : state) benchmark::DoNotOptimize(forward(base(), img));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

// arg: pruning ratio in percent
void BM_ForwardPruned(benchmark::State& state) {
  const auto calib = calibration_images(4, 0);
  const auto prof = profile_blocks(base(), 5, 1, calib[0]);
  const auto out = prune_model(base(), prof.blocks, calib, static_cast<double>(state.range(0)) / 100.0, PruneMethod::kDisha);
  const Tensor img = generate_scene(SceneSpec{}).image;
  for (auto _ : state) benchmark::DoNotOptimize(forward(out.model, img));
}
BENCHMARK(BM_ForwardPruned)->Arg(35)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "cinepred/optical_flow.hpp"
#include "cinepred/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cinepred;

void BM_LucasKanade(benchmark::State& state) {
  SyntheticSpec spec = SyntheticSpec::default_two_mode(4);
  spec.height = spec.width = state.range(0);
  const auto gt = generate_synthetic_sequence(spec);
  FlowParams p;
  p.n_layers = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(lucas_kanade_dense(gt.sequence.frames[0], gt.sequence.frames[3], p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_LucasKanade)->Args({96, 1})->Args({96, 3})->Args({270, 3})->Unit(benchmark::kMillisecond);

void BM_GaussianPyramid(benchmark::State& state) {
  SyntheticSpec spec = SyntheticSpec::default_two_mode(2);
  spec.height = spec.width = 270;
  const auto gt = generate_synthetic_sequence(spec);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_pyramid(gt.sequence.frames[0], 3, 0.5));
}
BENCHMARK(BM_GaussianPyramid)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

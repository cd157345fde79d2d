#include "cinepred/synthetic.hpp"
#include "cinepred/warping.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cinepred;

void BM_Warp(benchmark::State& state) {
  SyntheticSpec spec = SyntheticSpec::default_two_mode(8);
  spec.height = spec.width = state.range(0);
  const auto gt = generate_synthetic_sequence(spec);
  const WarpParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(warp_image(gt.reference, gt.true_dvfs[5], params));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Warp)->Arg(96)->Arg(270)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

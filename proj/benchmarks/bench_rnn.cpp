#include "cinepred/rnn.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace cinepred;

// One online step at the largest sizes of the hyper-parameter grid.
void BM_Step(benchmark::State& state) {
  const auto trainer = static_cast<RnnTrainer>(state.range(0));
  const Eigen::Index q = state.range(1);
  const Eigen::Index p = 2;
  const Eigen::Index in = 1 + p * state.range(2);
  std::mt19937_64 rng(7);
  auto net = make_recurrent_net(trainer, RnnWeights::gaussian(q, in, p, 0.02, rng), 0.01, 11);
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(in), t(p);
  for (Eigen::Index i = 0; i < in; ++i) u[i] = normal(rng);
  u[0] = 1.0;
  t << 0.3, -0.2;
  for (auto _ : state) benchmark::DoNotOptimize(net->step(u, t));
}
BENCHMARK(BM_Step)
    ->ArgNames({"trainer", "q", "L"})
    ->Args({static_cast<int>(RnnTrainer::Rtrl), 10, 6})
    ->Args({static_cast<int>(RnnTrainer::Rtrl), 30, 6})
    ->Args({static_cast<int>(RnnTrainer::Uoro), 110, 30})
    ->Args({static_cast<int>(RnnTrainer::Snap1), 110, 30})
    ->Args({static_cast<int>(RnnTrainer::Dni), 110, 30})
    ->Args({static_cast<int>(RnnTrainer::Frozen), 110, 30})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

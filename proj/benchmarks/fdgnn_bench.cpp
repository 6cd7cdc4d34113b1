#include <random>

#include <benchmark/benchmark.h>

#include "fdgnn/corridor_sim.hpp"
#include "fdgnn/gat.hpp"
#include "fdgnn/scenario_sampler.hpp"
#include "fdgnn/tensor.hpp"

using namespace fdgnn;

namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape s) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(shape_numel(s));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(s), std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor(rng, {n, n});
  const Tensor b = random_tensor(rng, {n, n});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

// One batch of 32 corridors, 8 nodes and 16 edges each.
void BM_GatForward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const std::size_t graphs = 32;
  EdgeIndex g{graphs * 8, {}, {}};
  for (std::size_t b = 0; b < graphs; ++b) {
    for (std::size_t k = 0; k + 1 < 8; ++k) {
      g.src.push_back(b * 8 + k);
      g.dst.push_back(b * 8 + k + 1);
      g.src.push_back(b * 8 + k + 1);
      g.dst.push_back(b * 8 + k);
    }
  }
  GatLayer layer("g", 14, 64, 4, 19, rng);
  const Tensor x = random_tensor(rng, {g.nodes, 14});
  const Tensor e = random_tensor(rng, {g.edges(), 19});
  const bool grad = state.range(0) != 0;
  for (auto _ : state) {
    if (grad) {
      Tensor out = layer.forward(x, g, e);
      sum(out).backward();
    } else {
      NoGradGuard guard;
      benchmark::DoNotOptimize(layer.forward(x, g, e));
    }
  }
}
BENCHMARK(BM_GatForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulateScenario(benchmark::State& state) {
  std::mt19937_64 rng(derive_seed(3, 0));
  const Scenario s = sample_scenario(rng, SamplingRanges{}, CorridorSpec::uniform(8, 600.0), TmcMode::kReal, "bench");
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s));
}
BENCHMARK(BM_SimulateScenario)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "hyperattn/exact.hpp"
#include "hyperattn/generators.hpp"
#include "hyperattn/heavy_sketch.hpp"
#include "hyperattn/hyper.hpp"
#include "hyperattn/lsh.hpp"

using namespace hyperattn;

namespace {

constexpr std::size_t kDim = 64;

AttentionInputs inputs(std::size_t n) {
  GeneratorSpec g;
  g.scale_inv_sqrt_d = true;
  return generate_inputs(n, kDim, g, 1);
}

void BM_ExactAttention(benchmark::State& state) {
  const AttentionInputs in = inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(exact_attention(in, false));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactAttention)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNSquared);

void BM_HyperAttention(benchmark::State& state) {
  const AttentionInputs in = inputs(static_cast<std::size_t>(state.range(0)));
  HyperParams p;
  p.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(hyper_attention_lsh(in, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HyperAttention)->RangeMultiplier(2)->Range(1024, 32768)->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oN);

void BM_CausalHyperAttention(benchmark::State& state) {
  const AttentionInputs in = inputs(static_cast<std::size_t>(state.range(0)));
  HyperParams p;
  p.causal_base_threshold = 1024;
  p.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(causal_hyper_attention(in, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CausalHyperAttention)->RangeMultiplier(2)->Range(2048, 16384)
    ->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNLogN);

void BM_SortLshMask(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const AttentionInputs in = inputs(n);
  const LshParams lsh{default_hash_bits(n), 5};
  for (auto _ : state) benchmark::DoNotOptimize(sort_lsh_mask(in.q, in.k, 256, lsh));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SortLshMask)->RangeMultiplier(4)->Range(1024, 65536)->Unit(benchmark::kMicrosecond)
    ->Complexity(benchmark::oNLogN);

void BM_SketchHeavyMask(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PlantedInstance inst = generate_planted(n, 16, 10.0, 2);
  const SketchParams p = SketchParams::with_defaults(128.0, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(sketch_heavy_mask(inst.inputs.q, inst.inputs.k, p));
}
BENCHMARK(BM_SketchHeavyMask)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

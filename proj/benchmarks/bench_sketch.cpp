#include <benchmark/benchmark.h>

#include <vector>

#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/heavy_hitters.hpp"
#include "sketchsgd/message.hpp"
#include "sketchsgd/random.hpp"

namespace {

using namespace sketchsgd;

std::vector<double> gaussian(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

void BM_AccumulateDense(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto g = gaussian(d, 1);
  CountSketch s(SketchConfig{d, 7, 40, 3});
  for (auto _ : state) {
    s.clear();
    s.accumulate(g);
    benchmark::DoNotOptimize(s.table().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d));
}
BENCHMARK(BM_AccumulateDense)->RangeMultiplier(4)->Range(1 << 10, 1 << 18);

void BM_EstimateAll(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto rows = static_cast<std::size_t>(state.range(1));
  const CountSketch s = CountSketch::from_dense(SketchConfig{d, rows, 96, 3}, gaussian(d, 1));
  for (auto _ : state) benchmark::DoNotOptimize(s.estimate_all());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d));
}
BENCHMARK(BM_EstimateAll)->Args({1 << 12, 7})->Args({1 << 12, 15})->Args({1 << 16, 15});

void BM_MergeAll(benchmark::State& state) {
  const auto workers = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 1 << 14;
  std::vector<CountSketch> sketches;
  for (std::size_t w = 0; w < workers; ++w) {
    sketches.push_back(CountSketch::from_dense(SketchConfig{d, 15, 600, 3}, gaussian(d, w)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(merge_all(sketches, 1.0 / static_cast<double>(workers)));
}
BENCHMARK(BM_MergeAll)->RangeMultiplier(2)->Range(1, 16);

void BM_HeavyMix(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64;
  const auto g = random_vector(VectorDistribution::kZipf, d, 2);
  const SketchDims dims = size_for(k, d, 0.05);
  const CountSketch s = CountSketch::from_dense(SketchConfig{d, dims.rows, dims.cols, 4}, g);
  const ExactLookup lookup = dense_lookup(g);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(heavymix(s, k, lookup, ++seed));
}
BENCHMARK(BM_HeavyMix)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

void BM_SketchRoundTrip(benchmark::State& state) {
  const CountSketch s = CountSketch::from_dense(SketchConfig{1 << 12, 15, 600, 3}, gaussian(1 << 12, 1));
  for (auto _ : state) {
    const auto bytes = s.serialize();
    benchmark::DoNotOptimize(CountSketch::deserialize(bytes));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(CountSketch::serialized_size(15, 600)));
}
BENCHMARK(BM_SketchRoundTrip);

}  // namespace

BENCHMARK_MAIN();

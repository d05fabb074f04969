#include <benchmark/benchmark.h>

#include "varimix/extraction.hpp"
#include "varimix/synthesis.hpp"
#include "varimix/unmixers.hpp"

using namespace varimix;

namespace {

SceneTruth scene(std::size_t side, std::size_t variants) {
  SceneConfig c;
  c.abundances.height = side;
  c.abundances.width = side;
  c.variability.classes.assign(3, ClassVariability{});
  c.variability.classes[0].mode = VariabilityMode::atmospheric;
  c.variability.classes[1].mode = VariabilityMode::hapke;
  c.variability.classes[2].mode = VariabilityMode::elmm_scaling;
  for (auto& k : c.variability.classes) k.variants = variants;
  c.seed = 1;
  return synthesize_scene(reference_base_library(100), c);
}

void BM_Fcls(benchmark::State& state) {
  const SceneTruth t = scene(static_cast<std::size_t>(state.range(0)), 1);
  const Matrix m = t.endmembers.mean();
  for (auto _ : state) benchmark::DoNotOptimize(fcls(t.image_noisy, m));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(t.image_noisy.pixels()));
}
BENCHMARK(BM_Fcls)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Mesma(benchmark::State& state) {
  const SceneTruth t = scene(20, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mesma(t.image_noisy, t.variants));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(t.image_noisy.pixels()));
}
BENCHMARK(BM_Mesma)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_SparseL1(benchmark::State& state) {
  const SceneTruth t = scene(20, static_cast<std::size_t>(state.range(0)));
  SolverOptions o;
  o.lambda_sparse = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(sparse_su_l1(t.image_noisy, t.variants, o));
}
BENCHMARK(BM_SparseL1)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_Elmm(benchmark::State& state) {
  const SceneTruth t = scene(20, 5);
  SolverOptions o;
  o.max_iters = 20;
  for (auto _ : state) benchmark::DoNotOptimize(elmm_unmix(t.image_noisy, t.endmembers.mean(), o));
}
BENCHMARK(BM_Elmm)->Unit(benchmark::kMillisecond);

void BM_Extraction(benchmark::State& state) {
  const SceneTruth t = scene(50, 1);
  for (auto _ : state) benchmark::DoNotOptimize(extract_endmembers(t.image_noisy, 3, 7));
}
BENCHMARK(BM_Extraction)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

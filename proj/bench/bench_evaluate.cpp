#include <benchmark/benchmark.h>

#include "dataset.hpp"
#include "falldet/detector.hpp"
#include "falldet/evaluation.hpp"
#include "falldet/synth.hpp"
#include "fixtures.hpp"

using namespace falldet;

namespace {

// Shared across benchmarks; written once.
const std::vector<VideoRecord>& dataset() {
  static testing::TempDir dir;
  static const auto manifest = load_manifest(testing::write_synthetic_dataset(dir / "data").string());
  return manifest;
}

DetectorConfig bed_config() {
  DetectorConfig c;
  c.bed_top_y = 0.5;
  return c;
}

void BM_EvaluateSerial(benchmark::State& state) {
  const auto& manifest = dataset();
  const auto config = bed_config();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_serial(manifest, config));
  state.SetItemsProcessed(state.iterations() * manifest.size());
}
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);

void BM_EvaluateParallel(benchmark::State& state) {
  const auto& manifest = dataset();
  const auto config = bed_config();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(manifest, config));
  state.SetItemsProcessed(state.iterations() * manifest.size());
}
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond);

void BM_Sweep3x3(benchmark::State& state) {
  const auto& manifest = dataset();
  SweepGrid grid{{0.5}, {0.03, 0.05, 0.07}, {0.4, 0.5, 0.6}, {2}};
  const auto points = expand_grid(grid, bed_config());
  for (auto _ : state) benchmark::DoNotOptimize(sweep(manifest, points));
}
BENCHMARK(BM_Sweep3x3)->Unit(benchmark::kMillisecond);

void BM_RunStream(benchmark::State& state) {
  const auto frames = synth::random_stream(1, 10'000);
  DetectorConfig config = bed_config();
  config.pair_policy = static_cast<PairPolicy>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_stream(frames, config));
  state.SetItemsProcessed(state.iterations() * frames.size());
  state.SetLabel(std::string(to_string(config.pair_policy)));
}
BENCHMARK(BM_RunStream)->DenseRange(0, 2);

void BM_Oracle(benchmark::State& state) {
  const auto frames = synth::random_stream(1, 10'000);
  const DetectorConfig config = bed_config();
  for (auto _ : state) benchmark::DoNotOptimize(synth::oracle_verdicts(frames, config));
  state.SetItemsProcessed(state.iterations() * frames.size());
}
BENCHMARK(BM_Oracle);

}  // namespace

BENCHMARK_MAIN();

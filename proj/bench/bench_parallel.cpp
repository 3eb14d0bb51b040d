#include <benchmark/benchmark.h>

#include "bracket/dgp.hpp"
#include "bracket/inference.hpp"
#include "bracket/monte_carlo.hpp"

using namespace bracket;

namespace {

const CombinedDataset& sample() {
  static const auto d = to_observed(generate(preset("ldv_lu_true", 5000), 11), false);
  return d;
}

BootstrapSpec boot_spec() {
  BootstrapSpec s;
  s.replicates = 200;
  s.seed = 3;
  return s;
}

McConfig mc_config() {
  McConfig c;
  c.reps = 16;
  c.seed = 5;
  return c;
}

void BM_bootstrap_serial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_serial(sample(), boot_spec()));
}
void BM_bootstrap_parallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap(sample(), boot_spec()));
}
void BM_monte_carlo_serial(benchmark::State& state) {
  const auto spec = preset("ldv_lu_true", 5000);
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_serial(spec, mc_config()));
}
void BM_monte_carlo_parallel(benchmark::State& state) {
  const auto spec = preset("ldv_lu_true", 5000);
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo(spec, mc_config()));
}

}  // namespace

BENCHMARK(BM_bootstrap_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_monte_carlo_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

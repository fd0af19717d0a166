#include <benchmark/benchmark.h>

#include "biopsim/experiments.hpp"
#include "biopsim/sim_engine.hpp"

using namespace biopsim;

namespace {

void BM_TrackStep(benchmark::State& state) {
  Scenario s = tracking_scenarios(default_experiment_config()).front();
  s.duration = 1e9;
  Simulation sim(s);
  for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_TrackStep);

void BM_InsertStep(benchmark::State& state) {
  Scenario s = insertion_scenarios(default_experiment_config()).front();
  Simulation sim(s);
  for (auto _ : state) {
    if (sim.tick() >= s.steps()) {
      state.PauseTiming();
      sim.reset();
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(sim.step());
  }
}
BENCHMARK(BM_InsertStep);

void BM_InsertionScenario(benchmark::State& state) {
  const Scenario s = insertion_scenarios(default_experiment_config()).front();
  for (auto _ : state) benchmark::DoNotOptimize(run(s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.steps() + 1));
}
BENCHMARK(BM_InsertionScenario)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

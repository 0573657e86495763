#include <benchmark/benchmark.h>

#include "beeflow/bench.hpp"
#include "beeflow/bundled.hpp"
#include "beeflow/sim.hpp"

using namespace beeflow;

static void BM_Simulate(benchmark::State& state, bundled::ScenarioTemplate (*make)()) {
  const bundled::ScenarioTemplate t = make();
  const Scenario s = bench::instantiate(t, bench::plan_for(t, bench::Policy::ContentionAware));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(s));
}
BENCHMARK_CAPTURE(BM_Simulate, t1, bundled::t1_scenario);
BENCHMARK_CAPTURE(BM_Simulate, io_heavy, bundled::io_heavy_scenario);
BENCHMARK_CAPTURE(BM_Simulate, shapes, bundled::shapes_scenario);

BENCHMARK_MAIN();

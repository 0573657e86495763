#include <benchmark/benchmark.h>

#include "beeflow/bench.hpp"
#include "beeflow/bundled.hpp"
#include "beeflow/partition.hpp"

using namespace beeflow;

static void BM_PartitionT1(benchmark::State& state) {
  const WorkflowDef t = bundled::t1();
  const Profiles p = default_profiles(t);
  for (auto _ : state) benchmark::DoNotOptimize(partition(t, p));
}
BENCHMARK(BM_PartitionT1);

static void BM_PartitionRandom(benchmark::State& state) {
  Rng rng(1);
  bench::TreeGenOptions opt;
  opt.min_nodes = opt.max_nodes = static_cast<std::size_t>(state.range(0));
  std::vector<std::pair<WorkflowDef, Profiles>> inputs;
  for (int i = 0; i < 16; ++i) {
    WorkflowDef t = bench::random_tree(rng, opt);
    Profiles p = bench::random_profiles(t, rng);
    inputs.emplace_back(std::move(t), std::move(p));
  }
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& [t, p] = inputs[k++ % inputs.size()];
    benchmark::DoNotOptimize(partition(t, p));
  }
}
BENCHMARK(BM_PartitionRandom)->Arg(10)->Arg(25)->Arg(50);

static void BM_ExpandPaths(benchmark::State& state) {
  const WorkflowDef t = bundled::llm_codegen();
  for (auto _ : state) {
    for (NodeIndex l : t.leaves()) benchmark::DoNotOptimize(expand_paths(t, l));
  }
}
BENCHMARK(BM_ExpandPaths);

BENCHMARK_MAIN();

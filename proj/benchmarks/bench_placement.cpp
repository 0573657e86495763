#include <benchmark/benchmark.h>

#include "beeflow/bench.hpp"
#include "beeflow/placement.hpp"

using namespace beeflow;

namespace {

struct Inputs {
  std::vector<WorkflowDef> trees;
  std::vector<ExpectedTimeline> timelines;
  std::vector<PartitionResult> parts;
  std::vector<PlacementWorkflow> wfs;
  ClusterSpec cluster;
};

Inputs make(std::size_t workflows, std::size_t nodes) {
  Inputs x;
  Rng rng(3);
  for (std::size_t w = 0; w < workflows; ++w) x.trees.push_back(bench::random_tree(rng, {}, "w" + std::to_string(w)));
  for (const auto& t : x.trees) {
    const Profiles p = bench::random_profiles(t, rng);
    x.timelines.push_back(align(t, p));
    x.parts.push_back(partition(t, p));
  }
  for (std::size_t w = 0; w < workflows; ++w) x.wfs.push_back({&x.trees[w], &x.timelines[w], &x.parts[w]});
  for (std::size_t n = 0; n < nodes; ++n) {
    NodeSpec s;
    s.node_id = "n" + std::to_string(n);
    s.cpu_cores = 64;
    s.mem_bytes = std::int64_t{64} << 30;
    x.cluster.nodes.push_back(s);
  }
  return x;
}

}  // namespace

static void BM_Place(benchmark::State& state) {
  const Inputs x = make(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(place(x.wfs, x.cluster));
}
BENCHMARK(BM_Place)->Args({2, 4})->Args({8, 8})->Args({16, 16});

static void BM_Penalty(benchmark::State& state) {
  const Inputs x = make(1, 1);
  std::vector<std::string> ids;
  for (const auto& e : x.timelines[0].entries()) ids.push_back(e.leaf_id);
  for (auto _ : state) benchmark::DoNotOptimize(workflow_penalty(x.timelines[0], ids));
}
BENCHMARK(BM_Penalty);

BENCHMARK_MAIN();

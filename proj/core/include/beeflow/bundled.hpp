#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "beeflow/bt.hpp"
#include "beeflow/convert.hpp"
#include "beeflow/placement.hpp"
#include "beeflow/sim.hpp"
#include "beeflow/trace.hpp"

namespace beeflow::bundled {

/// Sequence[f1, Parallel[Sequence[f2, f8], Sequence[f5, f6, f7]], Fallback[f3, f4]]
WorkflowDef t1();

/// a -> {b, c} -> d
DagDef diamond_dag();

/// idle -> work (loops on "retry") -> store -> END, bodies drawn by mock.outcome.
FsmDef three_state_fsm();

/// Two LLM generation subtrees under a "flat" parallel, evaluation, then an
/// actual run with a human-update fallback, retried as a whole.
WorkflowDef llm_codegen();
Profiles llm_codegen_profiles(const WorkflowDef& tree);

/// cyc epi gen soy vid ir fp wc
const std::vector<std::string>& shape_names();
/// Throws InvalidArgument for unknown names.
DagDef shape_dag(std::string_view name);
WorkflowDef shape(std::string_view name);
/// Deterministic per-leaf profiles; `io_scale` multiplies the byte counts.
Profiles synthetic_profiles(const WorkflowDef& tree, std::uint64_t seed, double io_scale = 1.0);

/// Records matching `profile` exactly for `requests` all-succeed executions;
/// never-reached leaves are logged as skipped.
std::vector<TraceRecord> uniform_traces(const WorkflowDef& tree, std::size_t requests,
                                        const FunctionProfile& profile = default_profile());

/// Single-board computers: 6 cores, 4 GiB, 50 MiB/s each.
ClusterSpec edge_cluster(std::size_t nodes = 4);

/// Workflows (partitioned with the contention-aware policy) plus cluster and
/// run settings; the plan is left empty for the caller to fill.
struct ScenarioTemplate {
  std::string name;
  std::vector<SimWorkflow> workflows;
  ClusterSpec cluster;
  SimMode mode = SimMode::Single;
  std::size_t requests_per_workflow = 1;
  std::uint64_t rng_seed = 0;
  double jitter = 0.0;
};

ScenarioTemplate t1_scenario();
/// Four byte-heavy shape workflows run together on the edge cluster.
ScenarioTemplate io_heavy_scenario();
/// All eight shapes, co-run.
ScenarioTemplate shapes_scenario();
ScenarioTemplate llm_scenario();
std::vector<ScenarioTemplate> all_scenarios();

/// Every bundled workflow with its example profiles.
std::vector<SimWorkflow> all_workflows();

/// Writes the example files (workflows, DAG/FSM sources, traces, profiles,
/// cluster, partitions, plans and scenarios) below `dir`. Returns the paths.
std::vector<std::filesystem::path> write_examples(const std::filesystem::path& dir);

}  // namespace beeflow::bundled

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beeflow/bt.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/placement.hpp"
#include "beeflow/trace.hpp"

namespace beeflow {

enum class SimMode { Single, CoRun };

std::string_view to_string(SimMode m) noexcept;
/// "single" or "co-run"; throws InvalidArgument.
SimMode parse_mode(std::string_view text);

struct SimWorkflow {
  WorkflowDef tree;
  Profiles profiles;
  PartitionResult partition;
};

struct Scenario {
  std::vector<SimWorkflow> workflows;
  PlacementPlan plan;
  ClusterSpec cluster;
  SimMode mode = SimMode::Single;
  std::size_t requests_per_workflow = 1;
  std::uint64_t rng_seed = 0;
  double composite_overhead_s = 0.0;
  /// Each sampled period and byte count is scaled by U(1 - jitter, 1 + jitter).
  double jitter = 0.0;
  std::size_t payload_limit_bytes = Payload::kDefaultLimitBytes;
};

/// Structural problems (missing plan entries, unknown nodes, oversized
/// requests); empty when the scenario can run.
std::vector<std::string> check_scenario(const Scenario& s);

struct RequestLatency {
  std::string workflow_id;
  std::size_t request_id = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double latency_s = 0.0;
  ExecStatus status = ExecStatus::Success;

  bool operator==(const RequestLatency&) const = default;
};

/// One executed, non-synthetic leaf invocation.
struct GanttEntry {
  std::string workflow_id;
  std::size_t request_id = 0;
  std::string leaf_id;
  std::string node_id;
  Interval init, input, exec, output;

  bool operator==(const GanttEntry&) const = default;
};

/// Every log entry of every request, including skipped and synthetic ones.
struct Invocation {
  std::string workflow_id;
  std::size_t request_id = 0;
  std::string leaf_id;
  std::string node_id;
  double ready_s = 0.0;
  double end_s = 0.0;
  std::int64_t input_bytes = 0;
  std::int64_t output_bytes = 0;
  std::uint32_t iteration = 0;
  ExecStatus status = ExecStatus::Success;
  bool skipped = false;
  bool synthetic = false;
  /// Index into SimReport::gantt, or SIZE_MAX when not executed.
  std::size_t gantt = SIZE_MAX;

  bool operator==(const Invocation&) const = default;
};

/// Constant-state stretch of a node's I/O channel.
struct IoSegment {
  std::string node_id;
  double start = 0.0;
  double end = 0.0;
  std::size_t active = 0;
  double rate_Bps = 0.0;  // sum over active transfers

  bool operator==(const IoSegment&) const = default;
};

struct CpuSegment {
  std::string node_id;
  double start = 0.0;
  double end = 0.0;
  double cores = 0.0;

  bool operator==(const CpuSegment&) const = default;
};

struct Transfer {
  std::string node_id;
  std::int64_t bytes = 0;
  double start = 0.0;
  double end = 0.0;
  bool input = false;

  bool operator==(const Transfer&) const = default;
};

struct NodeSeries {
  std::string node_id;
  double window_s = 5.0;
  std::vector<double> bytes_per_s;

  bool operator==(const NodeSeries&) const = default;
};

struct SimReport {
  std::vector<std::string> nodes;
  std::vector<RequestLatency> per_request;
  std::vector<GanttEntry> gantt;
  std::vector<Invocation> invocations;
  std::vector<Transfer> transfers;
  std::vector<IoSegment> io_log;
  std::vector<CpuSegment> cpu_log;
  std::vector<NodeSeries> node_tx;  // 5 s windows
  double span_s = 0.0;

  bool operator==(const SimReport&) const = default;
};

/// Discrete-event run: closed-loop client per workflow, FIFO cores,
/// processor-sharing I/O per node, cold start once per (leaf, node).
/// Throws UnplacedLeaf or InvalidScenario.
SimReport simulate(const Scenario& scenario);

/// Executors used by the simulator: FSM control leaves, the parametrized
/// mocks, and profile-driven failures for everything else.
ExecutorRegistry sim_executors(const Profiles& profiles);

void write_gantt_csv(const SimReport& report, std::ostream& out);
/// Throws IoError.
void export_gantt(const SimReport& report, const std::filesystem::path& path);
/// Throws ParseError.
std::vector<GanttEntry> parse_gantt_csv(std::istream& in);

/// Bytes moved per node per window, divided by the window length.
std::vector<NodeSeries> node_tx_series(const SimReport& report, double window_s = 5.0);
void write_node_tx_csv(const std::vector<NodeSeries>& series, std::ostream& out);

/// Trace records matching the simulated invocations.
std::vector<TraceRecord> report_traces(const SimReport& report);

struct LatencySummary {
  std::string workflow_id;
  std::size_t requests = 0;
  double min_s = 0.0;
  double median_s = 0.0;
  double p95_s = 0.0;
  double max_s = 0.0;
};

std::vector<LatencySummary> latency_summary(const SimReport& report);
void write_latency_summary(const std::vector<LatencySummary>& rows, std::ostream& out);

nlohmann::json to_json(const SimReport& report);

}  // namespace beeflow

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beeflow/bt.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/trace.hpp"

namespace beeflow {

struct NodeSpec {
  std::string node_id;
  double cpu_cores = 4.0;
  std::int64_t mem_bytes = std::int64_t{4} << 30;
  double io_bw_Bps = 100.0 * 1024 * 1024;

  bool operator==(const NodeSpec&) const = default;
};

struct ClusterSpec {
  std::vector<NodeSpec> nodes;

  const NodeSpec* find(std::string_view node_id) const;
  /// Throws UnknownNode.
  const NodeSpec& at(std::string_view node_id) const;
  bool operator==(const ClusterSpec&) const = default;
};

/// Duplicate ids and non-positive capacities, one message each.
std::vector<std::string> check_cluster(const ClusterSpec& cluster);

/// Name a subpath carries inside a plan: "<workflow_id>/<subpath_id>".
std::string qualified_id(const Subpath& sp);

struct PlacementPlan {
  std::map<std::string, std::string> assignments;  // qualified subpath id -> node id
  std::map<std::string, double> per_node_cost;     // every cluster node
  double total_cost = 0.0;
  /// Qualified ids in decision order.
  std::vector<std::string> order;

  bool operator==(const PlacementPlan&) const = default;
};

/// One workflow's inputs to placement. The pointers must outlive the call.
struct PlacementWorkflow {
  const WorkflowDef* tree = nullptr;
  const ExpectedTimeline* timeline = nullptr;
  const PartitionResult* partition = nullptr;
};

/// Leaves of one workflow placed on some node.
struct WorkflowLeaves {
  const ExpectedTimeline* timeline = nullptr;
  std::vector<std::string> leaves;
};

/// Σ length × degree² over the subset's I/O intervals. Throws UnknownLeaf.
double workflow_penalty(const ExpectedTimeline& timeline, std::span<const std::string> leaves);
/// Node cost: workflow penalties summed, no cross-workflow term.
double penalty(std::span<const WorkflowLeaves> on_node);

/// Σ overlap × (degree − 1) of the subpath's I/O periods, degrees taken with
/// the whole workflow colocated.
double sort_key(const Subpath& sp, const ExpectedTimeline& timeline);

/// Resource view of a node while a plan is being built.
class NodeLoad {
 public:
  void add(const WorkflowDef& tree, const ExpectedTimeline& timeline, const Subpath& sp);
  std::int64_t mem_bytes() const noexcept { return mem_; }
  /// Peak Σ cpu over expected exec periods, with `extra` added.
  double peak_cpu(std::span<const std::pair<Interval, double>> extra = {}) const;
  std::vector<WorkflowLeaves> by_workflow() const;
  double cost() const;

  static std::int64_t subpath_mem(const WorkflowDef& tree, const Subpath& sp);
  static std::vector<std::pair<Interval, double>> exec_demand(const WorkflowDef& tree, const ExpectedTimeline& timeline,
                                                              const Subpath& sp);

 private:
  std::int64_t mem_ = 0;
  std::vector<std::pair<Interval, double>> exec_;
  std::map<std::string, WorkflowLeaves> leaves_;
};

/// Memory sum and peak exec concurrency including the candidate both fit.
bool try_place(const NodeSpec& node, const NodeLoad& load, const WorkflowDef& tree, const ExpectedTimeline& timeline,
               const Subpath& sp);

/// Greedy placement in descending sort_key order, each subpath to the
/// feasible node minimizing current cost + delta. Throws NoFeasibleNode.
PlacementPlan place(std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster);

enum class Baseline { RoundRobin, Random, ColocateAll };

/// Comparison placements. RoundRobin rotates over nodes, Random picks a
/// feasible node uniformly, ColocateAll fills the first feasible node.
PlacementPlan place_baseline(std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster,
                             Baseline kind, std::uint64_t seed = 0);

/// Recomputes per-node and total costs of an assignment map.
void recompute_costs(PlacementPlan& plan, std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster);

}  // namespace beeflow

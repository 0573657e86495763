#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beeflow/bt.hpp"

namespace beeflow {

/// Ordered leaves of one workflow that can share resources without contention.
struct Subpath {
  std::string subpath_id;
  std::string workflow_id;
  std::vector<std::string> leaves;

  bool operator==(const Subpath&) const = default;
};

/// splitmix64 of (base, salt); used wherever a run fans out into seeded sub-runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept;

/// Unique node sequence from the root to `node`: the previous sibling is
/// followed under sequence/fallback parents, the parent otherwise.
std::vector<NodeIndex> raw_path(const WorkflowDef& tree, NodeIndex node);
std::vector<NodeIndex> raw_path(const WorkflowDef& tree, std::string_view node_id);

/// raw_path for composites, raw_path without the node itself for leaves.
std::vector<NodeIndex> prefix(const WorkflowDef& tree, NodeIndex node);
std::vector<NodeIndex> prefix(const WorkflowDef& tree, std::string_view node_id);

/// Structural prefix equality. Sound but conservative: identical node
/// sequences are required, and each composite in them must be an ancestor of
/// both leaves or of neither. No semantic reduction is attempted.
bool same_prefix(const WorkflowDef& tree, std::string_view leaf_a, std::string_view leaf_b);

struct ExpandOptions {
  /// Exhaustive enumeration up to this many paths, greedy single expansion beyond.
  std::size_t cap = 4096;
  /// Weight used by the greedy expansion (expected I/O); defaults to 1 per leaf.
  std::function<double(NodeIndex)> leaf_weight;
};

/// Expansions of path(node): leaves of the raw path are kept, ancestors of
/// `node` dropped, and every other composite is replaced by a path to one of
/// its leaves. Results are sorted and distinct.
std::vector<std::vector<NodeIndex>> expand_paths(const WorkflowDef& tree, NodeIndex node,
                                                 const ExpandOptions& options = {});

/// Number of exhaustive expansions of path(node), saturating at UINT64_MAX.
std::uint64_t count_paths(const WorkflowDef& tree, NodeIndex node);

/// Leaf a is ordered before leaf b: their lowest common ancestor is a
/// sequence or fallback and a sits in an earlier child.
bool precedes(const WorkflowDef& tree, NodeIndex a, NodeIndex b);

bool is_valid_subpath(const WorkflowDef& tree, std::span<const NodeIndex> leaves);
/// Throws UnknownNode for ids not in the tree.
bool is_valid_subpath(const WorkflowDef& tree, std::span<const std::string> leaf_ids);

/// Randomized check that no two of `leaves` are ever active at once.
/// Durations default to U(0.5, 1.5) logical seconds per invocation.
bool check_exclusivity(const WorkflowDef& tree, std::span<const NodeIndex> leaves, const ExecutorRegistry& executors,
                       std::size_t trials, std::uint64_t rng_seed, const DurationFn& duration = {});

/// Covers several candidate subpaths with one batch of executions.
std::vector<bool> check_exclusivity_all(const WorkflowDef& tree, std::span<const std::vector<NodeIndex>> subpaths,
                                        const ExecutorRegistry& executors, std::size_t trials,
                                        std::uint64_t rng_seed, const DurationFn& duration = {});

std::vector<std::string> leaf_ids(const WorkflowDef& tree, std::span<const NodeIndex> leaves);
std::vector<NodeIndex> leaf_indices(const WorkflowDef& tree, std::span<const std::string> leaf_ids);

}  // namespace beeflow

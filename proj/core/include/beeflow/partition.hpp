#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beeflow/bt.hpp"
#include "beeflow/paths.hpp"
#include "beeflow/trace.hpp"

namespace beeflow {

struct PartitionPolicy {
  enum class Kind { IoContentionAware, LongestPath, Named };
  Kind kind = Kind::IoContentionAware;
  std::string name;

  static PartitionPolicy io_contention() { return {}; }
  static PartitionPolicy longest_path() { return {Kind::LongestPath, {}}; }
  static PartitionPolicy named(std::string n) { return {Kind::Named, std::move(n)}; }
  bool operator==(const PartitionPolicy&) const = default;
};

/// "io-contention", "longest-path", anything else is Named.
PartitionPolicy parse_policy(std::string_view text);
std::string to_string(const PartitionPolicy& p);

/// What one phase knows about the residual leaves.
struct PhaseContext {
  const ExpectedTimeline& timeline;
  std::vector<std::string> residual;
  /// Peak-degree intervals of the residual I/O periods.
  std::vector<IoInterval> peaks;
  std::size_t peak_degree = 0;

  double peak_overlap(std::string_view leaf_id) const;
};

PhaseContext make_phase(const ExpectedTimeline& timeline, std::vector<std::string> residual);

/// Lexicographic score; see better().
struct CandidateScore {
  /// The candidate's strongest leaf: largest peak overlap, then I/O bytes, then smallest id.
  double anchor_overlap = 0.0;
  double anchor_bytes = 0.0;
  std::string anchor_id;
  double peak_overlap = 0.0;
  double io_bytes = 0.0;
  double busy_s = 0.0;
  std::size_t length = 0;
  std::vector<std::string> leaves;
  /// Scores from a Named policy, compared first and larger-is-better.
  std::vector<double> custom;
};

/// A Named policy maps a candidate to a larger-is-better key vector.
using PolicyFn = std::function<std::vector<double>(std::span<const std::string> candidate, const PhaseContext& phase)>;

class PolicyRegistry {
 public:
  void add(std::string name, PolicyFn fn);
  const PolicyFn* find(std::string_view name) const;

 private:
  std::map<std::string, PolicyFn, std::less<>> fns_;
};

/// Throws UnknownLeaf or PolicyNotRegistered.
CandidateScore score_candidate(std::span<const std::string> candidate, const PhaseContext& phase,
                               const PartitionPolicy& policy, const PolicyRegistry* registry = nullptr);

/// a ranks strictly above b. IoContentionAware order: anchor (overlap, bytes,
/// smaller id), total peak overlap, I/O bytes, busy time, fewer leaves, then
/// the lexicographically smaller leaf list. LongestPath: more leaves, then
/// the smaller list. Reals compare with 1e-9 relative tolerance.
bool better(const CandidateScore& a, const CandidateScore& b, const PartitionPolicy& policy);

struct PartitionResult {
  std::string workflow_id;
  std::vector<Subpath> subpaths;
  std::size_t residual_phases = 0;

  bool operator==(const PartitionResult&) const = default;
};

struct PartitionOptions {
  PartitionPolicy policy;
  const PolicyRegistry* registry = nullptr;
  ExpandOptions expand;
};

/// Residual of `tree` keeping only `keep` leaves; empty composites vanish.
/// Returns an empty WorkflowDef when nothing is left.
WorkflowDef residual_tree(const WorkflowDef& tree, const std::vector<bool>& keep);

/// Iterative removal: each phase picks the best candidate path over the
/// residual tree and removes its leaves. Synthetic leaves join the subpath of
/// their nearest ordinary sibling. Throws EmptyTree, PolicyNotRegistered.
PartitionResult partition(const WorkflowDef& tree, const Profiles& profiles, const PartitionOptions& options = {});

}  // namespace beeflow

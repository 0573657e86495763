#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beeflow/payload.hpp"

namespace beeflow {

using NodeIndex = std::size_t;
using Rng = std::mt19937_64;

enum class NodeKind { Leaf, Sequence, Fallback, Parallel, Decorator };

std::string_view to_string(NodeKind k) noexcept;

enum class ExecStatus { Success, Failure };

constexpr ExecStatus invert(ExecStatus s) noexcept {
  return s == ExecStatus::Success ? ExecStatus::Failure : ExecStatus::Success;
}

struct AggSpec {
  enum class Kind { AllSucceed, MOutOfN, Named };
  Kind kind = Kind::AllSucceed;
  int m = 0;
  std::string name;

  static AggSpec all_succeed() { return {}; }
  static AggSpec m_out_of_n(int m) { return {Kind::MOutOfN, m, {}}; }
  static AggSpec named(std::string name) { return {Kind::Named, 0, std::move(name)}; }

  bool operator==(const AggSpec&) const = default;
};

struct TailSpec {
  enum class Kind { Once, Negate, Retry, LoopTillEnd, Named };
  Kind kind = Kind::Once;
  int max_n = 1;
  /// flag key for LoopTillEnd, registry name for Named
  std::string key;

  static TailSpec once() { return {}; }
  static TailSpec negate() { return {Kind::Negate, 1, {}}; }
  static TailSpec retry(int max_n) { return {Kind::Retry, max_n, {}}; }
  static TailSpec loop_till_end(std::string flag = std::string(Payload::kEnd)) {
    return {Kind::LoopTillEnd, 1, std::move(flag)};
  }
  static TailSpec named(std::string name) { return {Kind::Named, 1, std::move(name)}; }

  bool operator==(const TailSpec&) const = default;
};

struct FunctionSpec {
  std::string id;
  std::int64_t mem_request_bytes = std::int64_t{128} << 20;
  double cpu_request_cores = 1.0;
  std::string executor_kind = "mock";
  /// Executor-specific settings (FSM guards and updates keep their tables here).
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const FunctionSpec&) const = default;
};

/// Recursive authoring form of a behavior tree. WorkflowDef flattens it.
struct BtNode {
  NodeKind kind = NodeKind::Leaf;
  std::string id;
  std::string function_id;  // leaves only
  bool synthetic = false;   // leaves only; zero-cost control steps
  std::vector<BtNode> children;
  AggSpec agg;
  TailSpec tail;

  bool operator==(const BtNode&) const = default;
};

BtNode leaf(std::string id, std::string function_id = {});
BtNode synthetic_leaf(std::string id, std::string function_id);
BtNode sequence(std::vector<BtNode> children, std::string id = {});
BtNode fallback(std::vector<BtNode> children, std::string id = {});
BtNode parallel(std::vector<BtNode> children, AggSpec agg = AggSpec::all_succeed(), std::string id = {});
BtNode decorator(BtNode child, TailSpec tail, std::string id = {});

/// One node of a flattened tree. Indices are preorder positions, so the
/// subtree of node i occupies [i, end).
struct TreeNode {
  std::string id;
  NodeKind kind = NodeKind::Leaf;
  std::string function_id;
  bool synthetic = false;
  AggSpec agg;
  TailSpec tail;
  std::optional<NodeIndex> parent;
  std::vector<NodeIndex> children;
  std::size_t child_pos = 0;
  std::size_t depth = 0;
  NodeIndex end = 0;

  bool is_leaf() const noexcept { return kind == NodeKind::Leaf; }
};

class WorkflowDef {
 public:
  WorkflowDef() = default;
  WorkflowDef(std::string workflow_id, const BtNode& root, std::vector<FunctionSpec> functions = {});

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  static constexpr NodeIndex root() noexcept { return 0; }
  const TreeNode& node(NodeIndex i) const { return nodes_.at(i); }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }

  std::optional<NodeIndex> find(std::string_view node_id) const;
  /// Throws UnknownNode.
  NodeIndex at(std::string_view node_id) const;
  /// Throws UnknownNode or NotALeaf.
  NodeIndex leaf_at(std::string_view leaf_id) const;

  /// All leaves in preorder.
  std::span<const NodeIndex> leaves() const noexcept { return leaves_; }
  std::vector<NodeIndex> leaves_under(NodeIndex n) const;

  /// a is a proper ancestor of b.
  bool is_ancestor(NodeIndex a, NodeIndex b) const noexcept {
    return a < b && b < nodes_[a].end;
  }

  const FunctionSpec* function(std::string_view function_id) const;
  std::span<const FunctionSpec> function_list() const noexcept { return functions_; }
  /// Function spec of a leaf; throws UnknownLeaf when the reference dangles.
  const FunctionSpec& function_of(NodeIndex leaf) const;

  const std::string& converted_from() const noexcept { return converted_from_; }
  void set_converted_from(std::string tag) { converted_from_ = std::move(tag); }

  BtNode to_bt(NodeIndex n = root()) const;

  /// Adds a default FunctionSpec for every referenced function id that has none.
  void add_missing_functions(const FunctionSpec& prototype = {});

 private:
  NodeIndex flatten(const BtNode& n, std::optional<NodeIndex> parent, std::size_t pos, std::size_t depth);
  void reindex_functions();

  std::string id_;
  std::vector<TreeNode> nodes_;
  std::vector<NodeIndex> leaves_;
  std::map<std::string, NodeIndex, std::less<>> by_id_;
  std::vector<FunctionSpec> functions_;
  std::map<std::string, std::size_t, std::less<>> function_index_;
  std::string converted_from_;
};

struct Violation {
  std::string code;
  std::string node_id;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate(const WorkflowDef& tree);

// ---------------------------------------------------------------------------
// Execution

struct TailDecision {
  bool reenter = false;
  ExecStatus result = ExecStatus::Success;

  static TailDecision reenter_subtree() { return {true, ExecStatus::Failure}; }
  static TailDecision returns(ExecStatus s) { return {false, s}; }
  bool operator==(const TailDecision&) const = default;
};

using AggFn = std::function<ExecStatus(std::span<const ExecStatus>)>;
using TailFn = std::function<TailDecision(ExecStatus, const Payload&, std::uint32_t iteration)>;

/// Name -> implementation tables for Named aggregates and tails.
class CompositeRegistry {
 public:
  /// Registry preloaded with the "flat" aggregate (always succeeds; child
  /// payloads are merged by the interpreter either way).
  static CompositeRegistry with_builtins();

  void add_agg(std::string name, AggFn fn);
  void add_tail(std::string name, TailFn fn);
  const AggFn* find_agg(std::string_view name) const;
  const TailFn* find_tail(std::string_view name) const;

 private:
  std::map<std::string, AggFn, std::less<>> aggs_;
  std::map<std::string, TailFn, std::less<>> tails_;
};

const CompositeRegistry& builtin_composites();

/// Throws AggUndefined for unknown Named specs.
ExecStatus eval_agg(const AggSpec& spec, std::span<const ExecStatus> results,
                    const CompositeRegistry& registry = builtin_composites());

/// Throws TailUndefined for unknown Named specs.
TailDecision eval_tail(const TailSpec& spec, ExecStatus subtree_result, const Payload& payload,
                       std::uint32_t iteration, const CompositeRegistry& registry = builtin_composites());

struct LeafCall {
  const WorkflowDef& workflow;
  NodeIndex leaf;
  const FunctionSpec& function;
  std::size_t invocation;   // ordinal among leaf invocations in this execution
  std::uint32_t iteration;  // pass number of the innermost decorator, 0 if none
};

using LeafFn = std::function<ExecStatus(const LeafCall&, Payload&, Rng&)>;
using DurationFn = std::function<double(const LeafCall&, Rng&)>;

/// Resolves a function's executor_kind to an implementation.
class ExecutorRegistry {
 public:
  /// Registry with the mock executors and the FSM control leaves:
  ///   mock        succeed
  ///   mock.fail   fail
  ///   mock.random succeed with params.p_success (0.5); optionally set
  ///               params.flag (default END) with params.p_flag
  ///   mock.outcome fail with params.p_fail (0), else set OUTCOME to a
  ///               uniform pick from params.labels
  ///   noop        succeed without touching the payload
  ///   fsm.guard / fsm.update / fsm.init  selector-structure control leaves;
  ///               params.sel_key / params.end_key rename SEL and END
  static ExecutorRegistry with_builtins();

  void add(std::string kind, LeafFn fn);
  /// Used for any executor_kind without an explicit entry.
  void set_fallback(LeafFn fn);
  const LeafFn* find(std::string_view kind) const;

 private:
  std::map<std::string, LeafFn, std::less<>> fns_;
  std::optional<LeafFn> fallback_;
};

/// One leaf in an execution log. Times are logical (durations from the
/// DurationFn); `deps` lists the entries whose completion released this one.
struct LogEntry {
  std::size_t order = 0;
  NodeIndex leaf = 0;
  ExecStatus status = ExecStatus::Success;
  bool skipped = false;
  double start = 0.0;
  double end = 0.0;
  std::uint32_t iteration = 0;
  std::vector<std::size_t> deps;
};

struct ExecutionLog {
  std::vector<LogEntry> entries;

  double makespan() const noexcept;
};

struct ExecOptions {
  std::size_t payload_limit_bytes = Payload::kDefaultLimitBytes;
  /// Executions stop (truncated = true) after this many leaf invocations.
  std::size_t max_invocations = 1'000'000;
  /// Default: 1.0 for ordinary leaves, 0.0 for synthetic ones.
  DurationFn duration;
  const CompositeRegistry* composites = nullptr;
};

struct ExecResult {
  ExecStatus status = ExecStatus::Success;
  Payload payload;
  ExecutionLog log;
  bool truncated = false;
};

ExecResult execute(const WorkflowDef& tree, Payload initial, const ExecutorRegistry& executors,
                   std::uint64_t rng_seed, const ExecOptions& options = {});

}  // namespace beeflow

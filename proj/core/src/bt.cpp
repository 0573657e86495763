#include "beeflow/bt.hpp"

#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Leaf: return "leaf";
    case NodeKind::Sequence: return "sequence";
    case NodeKind::Fallback: return "fallback";
    case NodeKind::Parallel: return "parallel";
    case NodeKind::Decorator: return "decorator";
  }
  return "leaf";
}

BtNode leaf(std::string id, std::string function_id) {
  BtNode n;
  n.kind = NodeKind::Leaf;
  n.function_id = function_id.empty() ? id : std::move(function_id);
  n.id = std::move(id);
  return n;
}

BtNode synthetic_leaf(std::string id, std::string function_id) {
  BtNode n = leaf(std::move(id), std::move(function_id));
  n.synthetic = true;
  return n;
}

namespace {
BtNode composite(NodeKind kind, std::vector<BtNode> children, std::string id) {
  BtNode n;
  n.kind = kind;
  n.id = std::move(id);
  n.children = std::move(children);
  return n;
}
}  // namespace

BtNode sequence(std::vector<BtNode> children, std::string id) {
  return composite(NodeKind::Sequence, std::move(children), std::move(id));
}

BtNode fallback(std::vector<BtNode> children, std::string id) {
  return composite(NodeKind::Fallback, std::move(children), std::move(id));
}

BtNode parallel(std::vector<BtNode> children, AggSpec agg, std::string id) {
  BtNode n = composite(NodeKind::Parallel, std::move(children), std::move(id));
  n.agg = std::move(agg);
  return n;
}

BtNode decorator(BtNode child, TailSpec tail, std::string id) {
  std::vector<BtNode> children;
  children.push_back(std::move(child));
  BtNode n = composite(NodeKind::Decorator, std::move(children), std::move(id));
  n.tail = std::move(tail);
  return n;
}

// ---------------------------------------------------------------------------

WorkflowDef::WorkflowDef(std::string workflow_id, const BtNode& root, std::vector<FunctionSpec> functions)
    : id_(std::move(workflow_id)), functions_(std::move(functions)) {
  flatten(root, std::nullopt, 0, 0);
  reindex_functions();
}

NodeIndex WorkflowDef::flatten(const BtNode& n, std::optional<NodeIndex> parent, std::size_t pos,
                               std::size_t depth) {
  const NodeIndex self = nodes_.size();
  TreeNode t;
  t.id = n.id.empty() ? std::string(to_string(n.kind)) + "#" + std::to_string(self) : n.id;
  t.kind = n.kind;
  t.function_id = n.function_id;
  t.synthetic = n.synthetic;
  t.agg = n.agg;
  t.tail = n.tail;
  t.parent = parent;
  t.child_pos = pos;
  t.depth = depth;
  nodes_.push_back(std::move(t));
  by_id_.emplace(nodes_[self].id, self);  // first occurrence wins; validate reports duplicates
  if (n.kind == NodeKind::Leaf) leaves_.push_back(self);

  std::vector<NodeIndex> kids;
  kids.reserve(n.children.size());
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    kids.push_back(flatten(n.children[i], self, i, depth + 1));
  }
  nodes_[self].children = std::move(kids);
  nodes_[self].end = nodes_.size();
  return self;
}

void WorkflowDef::reindex_functions() {
  function_index_.clear();
  for (std::size_t i = 0; i < functions_.size(); ++i) function_index_.emplace(functions_[i].id, i);
}

std::optional<NodeIndex> WorkflowDef::find(std::string_view node_id) const {
  auto it = by_id_.find(node_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

NodeIndex WorkflowDef::at(std::string_view node_id) const {
  auto found = find(node_id);
  if (!found) throw Error(Errc::UnknownNode, std::string(node_id) + " in workflow " + id_);
  return *found;
}

NodeIndex WorkflowDef::leaf_at(std::string_view leaf_id) const {
  NodeIndex i = at(leaf_id);
  if (!nodes_[i].is_leaf()) throw Error(Errc::NotALeaf, std::string(leaf_id));
  return i;
}

std::vector<NodeIndex> WorkflowDef::leaves_under(NodeIndex n) const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = n; i < nodes_.at(n).end; ++i) {
    if (nodes_[i].is_leaf()) out.push_back(i);
  }
  return out;
}

const FunctionSpec* WorkflowDef::function(std::string_view function_id) const {
  auto it = function_index_.find(function_id);
  return it == function_index_.end() ? nullptr : &functions_[it->second];
}

const FunctionSpec& WorkflowDef::function_of(NodeIndex leaf) const {
  const FunctionSpec* f = function(nodes_.at(leaf).function_id);
  if (f == nullptr) {
    throw Error(Errc::UnknownLeaf,
                "leaf " + nodes_[leaf].id + " references undefined function " + nodes_[leaf].function_id);
  }
  return *f;
}

BtNode WorkflowDef::to_bt(NodeIndex n) const {
  const TreeNode& t = nodes_.at(n);
  BtNode b;
  b.kind = t.kind;
  b.id = t.id;
  b.function_id = t.function_id;
  b.synthetic = t.synthetic;
  b.agg = t.agg;
  b.tail = t.tail;
  for (NodeIndex c : t.children) b.children.push_back(to_bt(c));
  return b;
}

void WorkflowDef::add_missing_functions(const FunctionSpec& prototype) {
  for (NodeIndex l : leaves_) {
    const std::string& fid = nodes_[l].function_id;
    if (fid.empty() || function(fid) != nullptr) continue;
    FunctionSpec f = prototype;
    f.id = fid;
    functions_.push_back(std::move(f));
    function_index_.emplace(functions_.back().id, functions_.size() - 1);
  }
}

// ---------------------------------------------------------------------------

std::vector<Violation> validate(const WorkflowDef& tree) {
  std::vector<Violation> out;
  auto report = [&](std::string code, const std::string& node, std::string msg) {
    out.push_back({std::move(code), node, std::move(msg)});
  };

  if (tree.size() == 0) {
    report("empty_tree", "", "workflow has no root");
    return out;
  }

  std::set<std::string, std::less<>> seen;
  for (const TreeNode& n : tree.nodes()) {
    if (!seen.insert(n.id).second) report("duplicate_id", n.id, "node id appears more than once");
    const std::size_t arity = n.children.size();
    switch (n.kind) {
      case NodeKind::Leaf:
        if (arity != 0) report("leaf_arity", n.id, "leaf has children");
        if (n.function_id.empty()) {
          report("missing_function", n.id, "leaf has no function id");
        } else if (tree.function(n.function_id) == nullptr) {
          report("dangling_function", n.id, "function " + n.function_id + " is not defined");
        }
        break;
      case NodeKind::Sequence:
      case NodeKind::Fallback:
      case NodeKind::Parallel:
        if (arity == 0) report("empty_composite", n.id, std::string(to_string(n.kind)) + " has no children");
        break;
      case NodeKind::Decorator:
        if (arity != 1) {
          report("decorator_arity", n.id, "decorator has " + std::to_string(arity) + " children, expected 1");
        }
        break;
    }
    if (n.kind == NodeKind::Parallel) {
      if (n.agg.kind == AggSpec::Kind::MOutOfN) {
        if (n.agg.m < 1) report("agg_m_range", n.id, "m must be at least 1");
        if (n.agg.m > static_cast<int>(arity)) {
          report("agg_m_exceeds_children", n.id,
                 "m=" + std::to_string(n.agg.m) + " exceeds " + std::to_string(arity) + " children");
        }
      } else if (n.agg.kind == AggSpec::Kind::Named && n.agg.name.empty()) {
        report("agg_name", n.id, "named aggregate without a name");
      }
    }
    if (n.kind == NodeKind::Decorator) {
      switch (n.tail.kind) {
        case TailSpec::Kind::Retry:
          if (n.tail.max_n < 1) report("tail_retry_range", n.id, "retry max_n must be at least 1");
          break;
        case TailSpec::Kind::LoopTillEnd:
          if (n.tail.key.empty()) report("tail_flag_key", n.id, "loop_till_end needs a flag key");
          break;
        case TailSpec::Kind::Named:
          if (n.tail.key.empty()) report("tail_name", n.id, "named tail without a name");
          break;
        default: break;
      }
    }
  }

  std::set<std::string, std::less<>> fids;
  for (const FunctionSpec& f : tree.function_list()) {
    if (!fids.insert(f.id).second) report("duplicate_function", f.id, "function id defined more than once");
    if (f.mem_request_bytes <= 0) report("function_mem", f.id, "mem_request_bytes must be positive");
    if (!(f.cpu_request_cores > 0.0)) report("function_cpu", f.id, "cpu_request_cores must be positive");
  }
  return out;
}

// ---------------------------------------------------------------------------

CompositeRegistry CompositeRegistry::with_builtins() {
  CompositeRegistry r;
  r.add_agg("flat", [](std::span<const ExecStatus>) { return ExecStatus::Success; });
  return r;
}

void CompositeRegistry::add_agg(std::string name, AggFn fn) { aggs_.insert_or_assign(std::move(name), std::move(fn)); }

void CompositeRegistry::add_tail(std::string name, TailFn fn) {
  tails_.insert_or_assign(std::move(name), std::move(fn));
}

const AggFn* CompositeRegistry::find_agg(std::string_view name) const {
  auto it = aggs_.find(name);
  return it == aggs_.end() ? nullptr : &it->second;
}

const TailFn* CompositeRegistry::find_tail(std::string_view name) const {
  auto it = tails_.find(name);
  return it == tails_.end() ? nullptr : &it->second;
}

const CompositeRegistry& builtin_composites() {
  static const CompositeRegistry registry = CompositeRegistry::with_builtins();
  return registry;
}

ExecStatus eval_agg(const AggSpec& spec, std::span<const ExecStatus> results, const CompositeRegistry& registry) {
  if (results.empty()) throw Error(Errc::InvalidArgument, "aggregate over an empty result list");
  switch (spec.kind) {
    case AggSpec::Kind::AllSucceed:
      for (ExecStatus s : results) {
        if (s != ExecStatus::Success) return ExecStatus::Failure;
      }
      return ExecStatus::Success;
    case AggSpec::Kind::MOutOfN: {
      int ok = 0;
      for (ExecStatus s : results) ok += s == ExecStatus::Success ? 1 : 0;
      return ok >= spec.m ? ExecStatus::Success : ExecStatus::Failure;
    }
    case AggSpec::Kind::Named: {
      const AggFn* fn = registry.find_agg(spec.name);
      if (fn == nullptr) throw Error(Errc::AggUndefined, spec.name);
      return (*fn)(results);
    }
  }
  return ExecStatus::Failure;
}

TailDecision eval_tail(const TailSpec& spec, ExecStatus subtree_result, const Payload& payload,
                       std::uint32_t iteration, const CompositeRegistry& registry) {
  if (iteration < 1) throw Error(Errc::InvalidArgument, "tail iteration starts at 1");
  switch (spec.kind) {
    case TailSpec::Kind::Once: return TailDecision::returns(subtree_result);
    case TailSpec::Kind::Negate: return TailDecision::returns(invert(subtree_result));
    case TailSpec::Kind::Retry:
      if (subtree_result == ExecStatus::Failure && static_cast<int>(iteration) < spec.max_n) {
        return TailDecision::reenter_subtree();
      }
      return TailDecision::returns(subtree_result);
    case TailSpec::Kind::LoopTillEnd: {
      const Value* flag = payload.find(spec.key);
      if (flag == nullptr || !truthy(*flag)) return TailDecision::reenter_subtree();
      return TailDecision::returns(subtree_result);
    }
    case TailSpec::Kind::Named: {
      const TailFn* fn = registry.find_tail(spec.key);
      if (fn == nullptr) throw Error(Errc::TailUndefined, spec.key);
      return (*fn)(subtree_result, payload, iteration);
    }
  }
  return TailDecision::returns(subtree_result);
}

}  // namespace beeflow

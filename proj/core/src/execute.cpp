#include <algorithm>

#include "beeflow/bt.hpp"
#include "beeflow/error.hpp"

namespace beeflow {

double ExecutionLog::makespan() const noexcept {
  double m = 0.0;
  for (const LogEntry& e : entries) m = std::max(m, e.end);
  return m;
}

// ---------------------------------------------------------------------------

namespace {

double param_number(const nlohmann::json& params, const char* key, double fallback) {
  auto it = params.find(key);
  if (it == params.end() || !it->is_number()) return fallback;
  return it->get<double>();
}

std::string param_string(const nlohmann::json& params, const char* key, std::string fallback = {}) {
  auto it = params.find(key);
  if (it == params.end() || !it->is_string()) return fallback;
  return it->get<std::string>();
}

std::string sel_key(const nlohmann::json& params) {
  return param_string(params, "sel_key", std::string(Payload::kSel));
}

std::string end_key(const nlohmann::json& params) {
  return param_string(params, "end_key", std::string(Payload::kEnd));
}

ExecStatus fsm_guard(const LeafCall& call, Payload& p, Rng&) {
  const nlohmann::json& params = call.function.params;
  const std::string state = param_string(params, "state");
  const Value* sel = p.find(sel_key(params));
  if (sel == nullptr) {
    auto it = params.find("initial");
    const bool is_initial = it != params.end() && it->is_boolean() && it->get<bool>();
    return is_initial ? ExecStatus::Success : ExecStatus::Failure;
  }
  const auto* s = std::get_if<std::string>(sel);
  return s != nullptr && *s == state ? ExecStatus::Success : ExecStatus::Failure;
}

ExecStatus fsm_update(const LeafCall& call, Payload& p, Rng&) {
  const nlohmann::json& params = call.function.params;
  auto table = params.find("transitions");
  if (table == params.end() || !table->is_object() || table->empty()) return ExecStatus::Failure;
  std::string outcome = p.get_string(Payload::kOutcome);
  if (outcome.empty() && table->size() == 1) outcome = table->begin().key();
  auto next = table->find(outcome);
  if (next == table->end() || !next->is_string()) return ExecStatus::Failure;
  const std::string target = next->get<std::string>();
  if (target == Payload::kEnd) {
    p.set(end_key(params), true);
  } else {
    p.set(sel_key(params), target);
    p.set(end_key(params), false);
  }
  p.erase(Payload::kOutcome);
  return ExecStatus::Success;
}

ExecStatus fsm_init(const LeafCall& call, Payload& p, Rng&) {
  const nlohmann::json& params = call.function.params;
  p.set(sel_key(params), param_string(params, "initial"));
  p.set(end_key(params), false);
  return ExecStatus::Success;
}

// Fails with p_fail, otherwise writes a uniformly drawn label to OUTCOME.
ExecStatus mock_outcome(const LeafCall& call, Payload& p, Rng& rng) {
  const nlohmann::json& params = call.function.params;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < param_number(params, "p_fail", 0.0)) return ExecStatus::Failure;
  auto labels = params.find("labels");
  if (labels == params.end() || !labels->is_array() || labels->empty()) return ExecStatus::Success;
  std::uniform_int_distribution<std::size_t> pick(0, labels->size() - 1);
  const auto& l = (*labels)[pick(rng)];
  if (l.is_string()) p.set(std::string(Payload::kOutcome), l.get<std::string>());
  return ExecStatus::Success;
}

ExecStatus mock_random(const LeafCall& call, Payload& p, Rng& rng) {
  const nlohmann::json& params = call.function.params;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool ok = u(rng) < param_number(params, "p_success", 0.5);
  const double p_flag = param_number(params, "p_flag", 0.0);
  if (p_flag > 0.0 && u(rng) < p_flag) p.set(param_string(params, "flag", std::string(Payload::kEnd)), true);
  return ok ? ExecStatus::Success : ExecStatus::Failure;
}

struct Truncated {};

/// Set of log entries gating the next leaf plus the logical time they all end by.
struct Frontier {
  std::vector<std::size_t> deps;
  double time = 0.0;
};

class Interpreter {
 public:
  Interpreter(const WorkflowDef& wf, const ExecutorRegistry& executors, const ExecOptions& opt, std::uint64_t seed)
      : wf_(wf),
        opt_(opt),
        composites_(opt.composites != nullptr ? *opt.composites : builtin_composites()),
        rng_(seed),
        fns_(wf.size(), nullptr) {
    for (NodeIndex l : wf.leaves()) {
      const TreeNode& n = wf.node(l);
      const FunctionSpec* f = wf.function(n.function_id);
      if (f == nullptr) throw Error(Errc::UnresolvedExecutor, n.function_id + " (no function definition)");
      const LeafFn* fn = executors.find(f->executor_kind);
      if (fn == nullptr) throw Error(Errc::UnresolvedExecutor, f->id + " (executor " + f->executor_kind + ")");
      fns_[l] = fn;
    }
    for (const TreeNode& n : wf.nodes()) {
      if ((!n.is_leaf() && n.children.empty()) || (n.kind == NodeKind::Decorator && n.children.size() != 1)) {
        throw Error(Errc::InvalidArgument, "malformed composite " + n.id + "; run validate first");
      }
      if (n.kind == NodeKind::Parallel && n.agg.kind == AggSpec::Kind::Named &&
          composites_.find_agg(n.agg.name) == nullptr) {
        throw Error(Errc::AggUndefined, n.agg.name);
      }
      if (n.kind == NodeKind::Decorator && n.tail.kind == TailSpec::Kind::Named &&
          composites_.find_tail(n.tail.key) == nullptr) {
        throw Error(Errc::TailUndefined, n.tail.key);
      }
    }
  }

  ExecResult run(Payload initial) {
    ExecResult r;
    r.payload = std::move(initial);
    Frontier f;
    try {
      r.status = visit(WorkflowDef::root(), r.payload, f, 0);
    } catch (const Truncated&) {
      r.status = ExecStatus::Failure;
      r.truncated = true;
    }
    r.log = std::move(log_);
    return r;
  }

 private:
  ExecStatus visit(NodeIndex n, Payload& p, Frontier& f, std::uint32_t iteration) {
    const TreeNode& node = wf_.node(n);
    switch (node.kind) {
      case NodeKind::Leaf: return invoke(n, p, f, iteration);
      case NodeKind::Sequence:
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          if (visit(node.children[i], p, f, iteration) == ExecStatus::Failure) {
            skip_after(node, i, f, iteration);
            return ExecStatus::Failure;
          }
        }
        return ExecStatus::Success;
      case NodeKind::Fallback:
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          if (visit(node.children[i], p, f, iteration) == ExecStatus::Success) {
            skip_after(node, i, f, iteration);
            return ExecStatus::Success;
          }
        }
        return ExecStatus::Failure;
      case NodeKind::Parallel: return run_parallel(node, p, f, iteration);
      case NodeKind::Decorator: {
        for (std::uint32_t it = 1;; ++it) {
          const ExecStatus s = visit(node.children.front(), p, f, it);
          const TailDecision d = eval_tail(node.tail, s, p, it, composites_);
          if (!d.reenter) return d.result;
        }
      }
    }
    return ExecStatus::Failure;
  }

  ExecStatus run_parallel(const TreeNode& node, Payload& p, Frontier& f, std::uint32_t iteration) {
    const Payload snapshot = p;
    std::vector<ExecStatus> results;
    std::vector<Payload> outputs;
    Frontier joined;
    joined.time = f.time;
    results.reserve(node.children.size());
    for (NodeIndex c : node.children) {
      Payload child_payload = snapshot;
      Frontier cf = f;
      results.push_back(visit(c, child_payload, cf, iteration));
      outputs.push_back(std::move(child_payload));
      joined.deps.insert(joined.deps.end(), cf.deps.begin(), cf.deps.end());
      joined.time = std::max(joined.time, cf.time);
    }
    // Flat merge in child order: only keys a child changed, later children win.
    for (const Payload& out : outputs) {
      for (const auto& [k, v] : out.entries()) {
        const Value* before = snapshot.find(k);
        if (before == nullptr || *before != v) p.set(k, v);
      }
      for (const auto& [k, v] : snapshot.entries()) {
        if (!out.contains(k)) p.erase(k);
      }
    }
    std::sort(joined.deps.begin(), joined.deps.end());
    joined.deps.erase(std::unique(joined.deps.begin(), joined.deps.end()), joined.deps.end());
    f = std::move(joined);
    return eval_agg(node.agg, results, composites_);
  }

  ExecStatus invoke(NodeIndex n, Payload& p, Frontier& f, std::uint32_t iteration) {
    if (invocations_ >= opt_.max_invocations) throw Truncated{};
    const LeafCall call{wf_, n, wf_.function_of(n), invocations_++, iteration};
    const ExecStatus status = (*fns_[n])(call, p, rng_);
    double duration = wf_.node(n).synthetic ? 0.0 : 1.0;
    if (opt_.duration) duration = opt_.duration(call, rng_);
    if (serialized_size(p) > opt_.payload_limit_bytes) {
      throw Error(Errc::PayloadLimitExceeded, "after leaf " + wf_.node(n).id + ": " +
                                                  std::to_string(serialized_size(p)) + " bytes > " +
                                                  std::to_string(opt_.payload_limit_bytes));
    }
    LogEntry e;
    e.order = log_.entries.size();
    e.leaf = n;
    e.status = status;
    e.start = f.time;
    e.end = f.time + duration;
    e.iteration = iteration;
    e.deps = f.deps;
    log_.entries.push_back(std::move(e));
    f.deps.assign(1, log_.entries.size() - 1);
    f.time = log_.entries.back().end;
    return status;
  }

  void skip_after(const TreeNode& node, std::size_t i, const Frontier& f, std::uint32_t iteration) {
    for (std::size_t j = i + 1; j < node.children.size(); ++j) {
      for (NodeIndex l : wf_.leaves_under(node.children[j])) {
        LogEntry e;
        e.order = log_.entries.size();
        e.leaf = l;
        e.status = ExecStatus::Failure;
        e.skipped = true;
        e.start = e.end = f.time;
        e.iteration = iteration;
        e.deps = f.deps;
        log_.entries.push_back(std::move(e));
      }
    }
  }

  const WorkflowDef& wf_;
  const ExecOptions& opt_;
  const CompositeRegistry& composites_;
  Rng rng_;
  std::vector<const LeafFn*> fns_;
  ExecutionLog log_;
  std::size_t invocations_ = 0;
};

}  // namespace

ExecutorRegistry ExecutorRegistry::with_builtins() {
  ExecutorRegistry r;
  r.add("mock", [](const LeafCall&, Payload&, Rng&) { return ExecStatus::Success; });
  r.add("noop", [](const LeafCall&, Payload&, Rng&) { return ExecStatus::Success; });
  r.add("mock.fail", [](const LeafCall&, Payload&, Rng&) { return ExecStatus::Failure; });
  r.add("mock.random", mock_random);
  r.add("mock.outcome", mock_outcome);
  r.add("fsm.guard", fsm_guard);
  r.add("fsm.update", fsm_update);
  r.add("fsm.init", fsm_init);
  return r;
}

void ExecutorRegistry::add(std::string kind, LeafFn fn) { fns_.insert_or_assign(std::move(kind), std::move(fn)); }

void ExecutorRegistry::set_fallback(LeafFn fn) { fallback_ = std::move(fn); }

const LeafFn* ExecutorRegistry::find(std::string_view kind) const {
  auto it = fns_.find(kind);
  if (it != fns_.end()) return &it->second;
  return fallback_ ? &*fallback_ : nullptr;
}

ExecResult execute(const WorkflowDef& tree, Payload initial, const ExecutorRegistry& executors,
                   std::uint64_t rng_seed, const ExecOptions& options) {
  if (tree.size() == 0) throw Error(Errc::EmptyTree, "workflow " + tree.id() + " has no nodes");
  Interpreter interp(tree, executors, options, rng_seed);
  return interp.run(std::move(initial));
}

}  // namespace beeflow

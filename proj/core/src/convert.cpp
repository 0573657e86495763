#include "beeflow/convert.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

namespace {

using Adj = std::map<std::string, std::vector<std::string>>;

struct Graph {
  std::set<std::string> nodes;
  Adj out;
  Adj in;
};

Graph build_graph(const DagDef& dag) {
  if (dag.nodes.empty()) throw Error(Errc::EmptyDag, "no nodes");
  Graph g;
  for (const auto& n : dag.nodes) {
    if (n.empty()) throw Error(Errc::InvalidArgument, "empty node id");
    if (!g.nodes.insert(n).second) throw Error(Errc::InvalidArgument, "duplicate node " + n);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [u, v] : dag.edges) {
    if (!g.nodes.contains(u) || !g.nodes.contains(v)) {
      throw Error(Errc::InvalidArgument, "edge " + u + "->" + v + " references an unknown node");
    }
    if (u == v) throw Error(Errc::CyclicInput, "self edge on " + u);
    if (!seen.insert({u, v}).second) continue;
    g.out[u].push_back(v);
    g.in[v].push_back(u);
  }
  // Kahn: every node must drain.
  std::map<std::string, std::size_t> indeg;
  for (const auto& n : g.nodes) indeg[n] = g.in.contains(n) ? g.in.at(n).size() : 0;
  std::vector<std::string> ready;
  for (const auto& [n, d] : indeg) {
    if (d == 0) ready.push_back(n);
  }
  std::size_t drained = 0;
  while (!ready.empty()) {
    const std::string n = ready.back();
    ready.pop_back();
    ++drained;
    if (auto it = g.out.find(n); it != g.out.end()) {
      for (const auto& v : it->second) {
        if (--indeg[v] == 0) ready.push_back(v);
      }
    }
  }
  if (drained != g.nodes.size()) {
    std::string stuck;
    for (const auto& [n, d] : indeg) {
      if (d > 0) {
        stuck = n;
        break;
      }
    }
    throw Error(Errc::CyclicInput, "cycle through " + stuck);
  }
  return g;
}

bool has_neighbor_in(const Adj& adj, const std::string& n, const std::set<std::string>& subset) {
  auto it = adj.find(n);
  if (it == adj.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](const std::string& m) { return subset.contains(m); });
}

BtNode group(const std::vector<std::string>& ids) {
  if (ids.size() == 1) return leaf(ids.front());
  std::vector<BtNode> kids;
  kids.reserve(ids.size());
  for (const auto& id : ids) kids.push_back(leaf(id));
  return parallel(std::move(kids));
}

void append_flat(std::vector<BtNode>& seq, BtNode n) {
  if (n.kind == NodeKind::Sequence) {
    for (auto& c : n.children) seq.push_back(std::move(c));
  } else {
    seq.push_back(std::move(n));
  }
}

std::vector<std::set<std::string>> weak_components(const Graph& g, const std::set<std::string>& subset) {
  std::vector<std::set<std::string>> comps;
  std::set<std::string> visited;
  for (const auto& start : subset) {
    if (visited.contains(start)) continue;
    std::set<std::string> comp;
    std::vector<std::string> stack{start};
    visited.insert(start);
    while (!stack.empty()) {
      const std::string n = stack.back();
      stack.pop_back();
      comp.insert(n);
      for (const Adj* adj : {&g.out, &g.in}) {
        auto it = adj->find(n);
        if (it == adj->end()) continue;
        for (const auto& m : it->second) {
          if (subset.contains(m) && visited.insert(m).second) stack.push_back(m);
        }
      }
    }
    comps.push_back(std::move(comp));
  }
  // std::set iteration already yields components ordered by smallest member.
  return comps;
}

BtNode convert(const Graph& g, std::set<std::string> rest) {
  std::vector<std::string> sources;
  for (const auto& n : rest) {
    if (!has_neighbor_in(g.in, n, rest)) sources.push_back(n);
  }
  for (const auto& n : sources) rest.erase(n);
  BtNode head = group(sources);
  if (rest.empty()) return head;

  std::vector<std::string> sinks;
  for (const auto& n : rest) {
    if (!has_neighbor_in(g.out, n, rest)) sinks.push_back(n);
  }
  for (const auto& n : sinks) rest.erase(n);
  BtNode tail = group(sinks);

  std::vector<BtNode> seq;
  append_flat(seq, std::move(head));
  if (!rest.empty()) {
    std::vector<BtNode> parts;
    for (auto& comp : weak_components(g, rest)) parts.push_back(convert(g, std::move(comp)));
    if (parts.size() == 1) {
      append_flat(seq, std::move(parts.front()));
    } else {
      seq.push_back(parallel(std::move(parts)));
    }
  }
  append_flat(seq, std::move(tail));
  return sequence(std::move(seq));
}

}  // namespace

BtNode dag_to_bt_node(const DagDef& dag) {
  const Graph g = build_graph(dag);
  return convert(g, g.nodes);
}

WorkflowDef dag_to_bt(const DagDef& dag, std::string workflow_id, const FunctionSpec& prototype) {
  WorkflowDef wf(std::move(workflow_id), dag_to_bt_node(dag), dag.functions);
  wf.add_missing_functions(prototype);
  wf.set_converted_from("dag");
  return wf;
}

// ---------------------------------------------------------------------------

namespace {

void check_fsm_into(const FsmDef& fsm, const std::string& where, std::vector<std::string>& out) {
  auto report = [&](const std::string& msg) { out.push_back(where + msg); };
  std::set<std::string> states;
  for (const auto& s : fsm.states) {
    if (s.empty()) report("empty state id");
    if (s == Payload::kEnd) report("state may not be named END");
    if (!states.insert(s).second) report("duplicate state " + s);
  }
  if (states.empty()) report("no states");
  if (!states.contains(fsm.initial)) report("initial state " + fsm.initial + " is not a state");

  std::map<std::string, std::vector<const FsmDef*>> hosted;
  std::set<std::string> child_ids;
  for (const FsmDef& child : fsm.nested) {
    if (!states.contains(child.host)) report("nested machine " + child.id + " has unknown host " + child.host);
    if (child.id.empty()) report("nested machine without id");
    if (!child_ids.insert(child.id).second) report("duplicate nested machine id " + child.id);
    hosted[child.host].push_back(&child);
  }

  for (const auto& [s, f] : fsm.body) {
    if (!states.contains(s)) report("body for unknown state " + s);
    if (f.empty()) report("state " + s + " has an empty function id");
  }

  std::set<std::pair<std::string, std::string>> rows;
  std::map<std::string, std::size_t> labels;
  for (const auto& t : fsm.transitions) {
    if (!states.contains(t.state)) report("transition from unknown state " + t.state);
    if (t.next != Payload::kEnd && !states.contains(t.next)) {
      report("transition " + t.state + "/" + t.outcome + " targets unknown state " + t.next);
    }
    if (!rows.insert({t.state, t.outcome}).second) report("duplicate transition " + t.state + "/" + t.outcome);
    ++labels[t.state];
  }
  for (const auto& s : states) {
    const bool has_body = fsm.body.contains(s);
    const bool hosts = hosted.contains(s);
    if (!has_body && !hosts) report("state " + s + " has no body");
    if (has_body && hosts) report("state " + s + " has both a body and nested machines");
    if (!labels.contains(s)) report("state " + s + " has no transitions");
    if (hosts && labels[s] != 1) report("state " + s + " hosts nested machines and needs exactly one transition");
  }
  for (const FsmDef& child : fsm.nested) check_fsm_into(child, where + child.id + "/", out);
}

class FsmBuilder {
 public:
  explicit FsmBuilder(std::vector<FunctionSpec>& functions) : functions_(functions) {}

  /// Selector loop for one machine; `p` prefixes node ids and payload keys.
  BtNode loop(const FsmDef& fsm, const std::string& p) {
    const std::string sel = p + std::string(Payload::kSel);
    const std::string end = p + std::string(Payload::kEnd);
    std::vector<BtNode> arms;
    for (const auto& s : fsm.states) {
      const std::string guard_id = p + "guard." + s;
      add_control(guard_id, "fsm.guard",
                  {{"state", s}, {"initial", s == fsm.initial}, {"sel_key", sel}});

      nlohmann::json table = nlohmann::json::object();
      for (const auto& t : fsm.transitions) {
        if (t.state == s) table[t.outcome] = t.next;
      }
      const std::string update_id = p + "update." + s;
      add_control(update_id, "fsm.update", {{"transitions", table}, {"sel_key", sel}, {"end_key", end}});

      std::vector<BtNode> arm;
      arm.push_back(synthetic_leaf(guard_id, guard_id));
      arm.push_back(body(fsm, s, p));
      arm.push_back(synthetic_leaf(update_id, update_id));
      arms.push_back(sequence(std::move(arm), p + "state." + s));
    }
    return decorator(fallback(std::move(arms), p + "select"), TailSpec::loop_till_end(end), p + "loop");
  }

 private:
  BtNode body(const FsmDef& fsm, const std::string& s, const std::string& p) {
    if (auto it = fsm.body.find(s); it != fsm.body.end()) return leaf(p + s, it->second);
    std::vector<BtNode> branches;
    for (const FsmDef& child : fsm.nested) {
      if (child.host != s) continue;
      const std::string cp = p + child.id + "/";
      const std::string init_id = cp + "init";
      add_control(init_id, "fsm.init",
                  {{"initial", child.initial},
                   {"sel_key", cp + std::string(Payload::kSel)},
                   {"end_key", cp + std::string(Payload::kEnd)}});
      for (const FunctionSpec& f : child.functions) add_function(f);
      std::vector<BtNode> branch;
      branch.push_back(synthetic_leaf(init_id, init_id));
      branch.push_back(loop(child, cp));
      branches.push_back(sequence(std::move(branch), cp + "run"));
    }
    if (branches.size() == 1) return std::move(branches.front());
    return parallel(std::move(branches), AggSpec::all_succeed(), p + "nested." + s);
  }

  void add_control(const std::string& id, const std::string& kind, nlohmann::json params) {
    FunctionSpec f;
    f.id = id;
    f.executor_kind = kind;
    f.params = std::move(params);
    functions_.push_back(std::move(f));
  }

  void add_function(const FunctionSpec& f) {
    if (std::none_of(functions_.begin(), functions_.end(), [&](const FunctionSpec& g) { return g.id == f.id; })) {
      functions_.push_back(f);
    }
  }

  std::vector<FunctionSpec>& functions_;
};

}  // namespace

std::vector<std::string> check_fsm(const FsmDef& fsm) {
  std::vector<std::string> out;
  check_fsm_into(fsm, "", out);
  return out;
}

WorkflowDef fsm_to_bt(const FsmDef& fsm, std::string workflow_id, const FunctionSpec& prototype) {
  if (auto problems = check_fsm(fsm); !problems.empty()) {
    std::string msg = problems.front();
    if (problems.size() > 1) msg += " (+" + std::to_string(problems.size() - 1) + " more)";
    throw Error(Errc::InvalidFsm, msg);
  }
  std::vector<FunctionSpec> functions = fsm.functions;
  FsmBuilder b(functions);
  const BtNode root = b.loop(fsm, "");
  WorkflowDef wf(std::move(workflow_id), root, std::move(functions));
  wf.add_missing_functions(prototype);
  wf.set_converted_from("fsm");
  return wf;
}

}  // namespace beeflow

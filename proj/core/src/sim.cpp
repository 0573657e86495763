#include "beeflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

std::string_view to_string(SimMode m) noexcept { return m == SimMode::Single ? "single" : "co-run"; }

SimMode parse_mode(std::string_view text) {
  if (text == "single" || text == "sg") return SimMode::Single;
  if (text == "co-run" || text == "corun" || text == "co") return SimMode::CoRun;
  throw Error(Errc::InvalidArgument, "unknown mode " + std::string(text));
}

ExecutorRegistry sim_executors(const Profiles& profiles) {
  ExecutorRegistry r = ExecutorRegistry::with_builtins();
  LeafFn by_profile = [&profiles](const LeafCall& call, Payload&, Rng& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = profiles.functions.find(call.workflow.node(call.leaf).id);
    const double p_fail = it == profiles.functions.end() ? 0.0 : it->second.fail_prob;
    return u < p_fail ? ExecStatus::Failure : ExecStatus::Success;
  };
  r.add("mock", by_profile);
  r.set_fallback(by_profile);
  return r;
}

namespace {

struct LeafNodes {
  std::map<NodeIndex, std::size_t> node_of;  // leaf -> cluster node index
};

std::vector<LeafNodes> resolve_nodes(const Scenario& s, std::vector<std::string>* problems) {
  std::vector<LeafNodes> out(s.workflows.size());
  std::map<std::string, std::size_t> node_index;
  for (std::size_t n = 0; n < s.cluster.nodes.size(); ++n) node_index.emplace(s.cluster.nodes[n].node_id, n);
  for (std::size_t w = 0; w < s.workflows.size(); ++w) {
    const SimWorkflow& wf = s.workflows[w];
    for (const Subpath& sp : wf.partition.subpaths) {
      const std::string qid = qualified_id(sp);
      auto a = s.plan.assignments.find(qid);
      if (a == s.plan.assignments.end()) {
        if (problems) problems->push_back("subpath " + qid + " is not in the plan");
        continue;
      }
      auto n = node_index.find(a->second);
      if (n == node_index.end()) {
        if (problems) problems->push_back("subpath " + qid + " assigned to unknown node " + a->second);
        continue;
      }
      for (const std::string& leaf_id : sp.leaves) {
        auto l = wf.tree.find(leaf_id);
        if (!l || !wf.tree.node(*l).is_leaf()) {
          if (problems) problems->push_back("subpath " + qid + " names unknown leaf " + leaf_id);
          continue;
        }
        out[w].node_of[*l] = n->second;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> check_scenario(const Scenario& s) {
  std::vector<std::string> out = check_cluster(s.cluster);
  if (s.workflows.empty()) out.push_back("scenario has no workflows");
  if (s.requests_per_workflow < 1) out.push_back("requests_per_workflow must be at least 1");
  if (s.composite_overhead_s < 0.0) out.push_back("composite_overhead_s must be non-negative");
  if (s.jitter < 0.0 || s.jitter >= 1.0) out.push_back("jitter must be in [0, 1)");
  std::set<std::string> ids;
  for (const SimWorkflow& wf : s.workflows) {
    if (!ids.insert(wf.tree.id()).second) out.push_back("duplicate workflow id " + wf.tree.id());
    if (wf.tree.size() == 0) out.push_back("workflow " + wf.tree.id() + " is empty");
  }
  if (!out.empty()) return out;
  resolve_nodes(s, &out);
  const auto nodes = resolve_nodes(s, nullptr);
  for (std::size_t w = 0; w < s.workflows.size(); ++w) {
    const WorkflowDef& t = s.workflows[w].tree;
    for (NodeIndex l : t.leaves()) {
      auto it = nodes[w].node_of.find(l);
      if (it == nodes[w].node_of.end()) continue;  // reported by simulate as UnplacedLeaf
      const FunctionSpec* f = t.function(t.node(l).function_id);
      if (f != nullptr && !t.node(l).synthetic && f->cpu_request_cores > s.cluster.nodes[it->second].cpu_cores) {
        out.push_back("leaf " + t.node(l).id + " requests more cores than node " +
                      s.cluster.nodes[it->second].node_id + " has");
      }
    }
  }
  return out;
}

namespace {

enum class Ev { RequestStart, Ready, InitDone, DelayDone, IoCheck, ExecDone };

struct Event {
  double t;
  std::uint64_t seq;
  Ev kind;
  std::size_t a;
  std::uint64_t b;

  bool operator>(const Event& o) const { return t > o.t || (t == o.t && seq > o.seq); }
};

struct Inv {
  std::size_t req = 0;
  NodeIndex leaf = 0;
  std::size_t node = 0;
  bool skipped = false;
  bool synthetic = false;
  ExecStatus status = ExecStatus::Success;
  std::uint32_t iteration = 0;
  std::size_t pending = 0;
  std::vector<std::size_t> dependents;
  double dep_done = 0.0;

  double init_d = 0.0, in_delay = 0.0, exec_d = 0.0, out_delay = 0.0;
  std::int64_t in_bytes = 0, out_bytes = 0;
  double cpu = 0.0;

  double ready = 0.0;
  Interval init, input, exec, output;
  double end = 0.0;
};

struct Request {
  std::size_t wf = 0;
  std::size_t number = 0;
  double start = 0.0;
  std::size_t remaining = 0;
  ExecStatus status = ExecStatus::Success;
};

struct ActiveTransfer {
  std::size_t inv;
  bool input;
  double remaining;
  std::int64_t bytes;
  double start;
};

struct NodeState {
  const NodeSpec* spec = nullptr;
  std::vector<ActiveTransfer> active;
  double last = 0.0;
  double seg_start = 0.0;
  std::uint64_t version = 0;
  double cores_used = 0.0;
  double cpu_seg_start = 0.0;
  std::deque<std::size_t> queue;
  std::set<std::pair<std::size_t, NodeIndex>> warm;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& s) : s_(s), nodes_(s.cluster.nodes.size()) {
    if (auto problems = check_scenario(s); !problems.empty()) throw Error(Errc::InvalidScenario, problems.front());
    placement_ = resolve_nodes(s, nullptr);
    for (std::size_t w = 0; w < s.workflows.size(); ++w) {
      const WorkflowDef& t = s.workflows[w].tree;
      for (NodeIndex l : t.leaves()) {
        if (!placement_[w].node_of.contains(l)) {
          throw Error(Errc::UnplacedLeaf, t.id() + "/" + t.node(l).id);
        }
      }
      Profiles p = default_profiles(t);
      for (const auto& [k, v] : s.workflows[w].profiles.functions) p.functions.insert_or_assign(k, v);
      p.loops = s.workflows[w].profiles.loops;
      profiles_.push_back(std::move(p));
    }
    for (const Profiles& p : profiles_) executors_.push_back(sim_executors(p));
    for (std::size_t n = 0; n < nodes_.size(); ++n) nodes_[n].spec = &s.cluster.nodes[n];
    for (const NodeSpec& n : s.cluster.nodes) report_.nodes.push_back(n.node_id);
    done_requests_.assign(s.workflows.size(), 0);
  }

  SimReport run() {
    if (s_.mode == SimMode::CoRun) {
      for (std::size_t w = 0; w < s_.workflows.size(); ++w) push(0.0, Ev::RequestStart, w, 0);
    } else {
      push(0.0, Ev::RequestStart, 0, 0);
    }
    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      now_ = e.t;
      dispatch(e);
    }
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      io_segment(n, now_);
      cpu_segment(n, now_);
    }
    report_.span_s = now_;
    report_.node_tx = node_tx_series(report_, 5.0);
    return std::move(report_);
  }

 private:
  void push(double t, Ev kind, std::size_t a, std::uint64_t b) { events_.push({t, seq_++, kind, a, b}); }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case Ev::RequestStart: start_request(e.a, static_cast<std::size_t>(e.b)); break;
      case Ev::Ready: on_ready(e.a); break;
      case Ev::InitDone:
        invs_[e.a].init.end = now_;
        start_io(e.a, true);
        break;
      case Ev::DelayDone: io_done(e.a, e.b != 0); break;
      case Ev::IoCheck: io_check(e.a, e.b); break;
      case Ev::ExecDone: on_exec_done(e.a); break;
    }
  }

  double factor(Rng& rng) const {
    if (s_.jitter <= 0.0) return 1.0;
    return std::uniform_real_distribution<double>(1.0 - s_.jitter, 1.0 + s_.jitter)(rng);
  }

  void start_request(std::size_t w, std::size_t number) {
    const SimWorkflow& wf = s_.workflows[w];
    const std::uint64_t seed = derive_seed(derive_seed(s_.rng_seed, w), number);
    ExecOptions opt;
    opt.payload_limit_bytes = s_.payload_limit_bytes;
    opt.max_invocations = 100'000;
    const ExecResult r = execute(wf.tree, Payload{}, executors_[w], seed, opt);

    const std::size_t req = requests_.size();
    requests_.push_back({w, number, now_, r.log.entries.size(), r.status});
    Rng rng(derive_seed(seed, 0x51u));
    const std::size_t base = invs_.size();
    for (const LogEntry& le : r.log.entries) {
      Inv v;
      v.req = req;
      v.leaf = le.leaf;
      v.node = placement_[w].node_of.at(le.leaf);
      v.skipped = le.skipped;
      v.synthetic = wf.tree.node(le.leaf).synthetic;
      v.status = le.status;
      v.iteration = le.iteration;
      v.pending = le.deps.size();
      if (!v.skipped && !v.synthetic) {
        const FunctionProfile& p = profiles_[w].functions.at(wf.tree.node(le.leaf).id);
        v.init_d = p.init_delay_s * factor(rng);
        v.in_delay = p.input_delay_s * factor(rng);
        v.exec_d = p.exec_delay_s * factor(rng);
        v.out_delay = p.output_delay_s * factor(rng);
        v.in_bytes = std::llround(p.input_bytes * factor(rng));
        v.out_bytes = std::llround(p.output_bytes * factor(rng));
        v.cpu = wf.tree.function_of(le.leaf).cpu_request_cores;
      }
      invs_.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < r.log.entries.size(); ++i) {
      for (std::size_t d : r.log.entries[i].deps) invs_[base + d].dependents.push_back(base + i);
    }
    for (std::size_t i = 0; i < r.log.entries.size(); ++i) {
      if (invs_[base + i].pending == 0) push(now_ + s_.composite_overhead_s, Ev::Ready, base + i, 0);
    }
    if (r.log.entries.empty()) finish_request(req);
  }

  void on_ready(std::size_t i) {
    Inv& v = invs_[i];
    v.ready = now_;
    if (v.skipped || v.synthetic) {
      v.init = v.input = v.exec = v.output = {now_, now_};
      complete(i);
      return;
    }
    NodeState& n = nodes_[v.node];
    const bool cold = n.warm.insert({requests_[v.req].wf, v.leaf}).second;
    v.init.start = now_;
    push(now_ + (cold ? v.init_d : 0.0), Ev::InitDone, i, 0);
  }

  void start_io(std::size_t i, bool input) {
    Inv& v = invs_[i];
    const std::int64_t bytes = input ? v.in_bytes : v.out_bytes;
    (input ? v.input : v.output).start = now_;
    if (bytes <= 0) {
      push(now_ + (input ? v.in_delay : v.out_delay), Ev::DelayDone, i, input ? 1 : 0);
      return;
    }
    const std::size_t node = v.node;
    NodeState& n = nodes_[node];
    io_advance(n);
    io_segment(node, now_);
    n.active.push_back({i, input, static_cast<double>(bytes), bytes, now_});
    ++n.version;
    io_schedule(node);
  }

  void io_advance(NodeState& n) {
    if (!n.active.empty()) {
      const double rate = n.spec->io_bw_Bps / static_cast<double>(n.active.size());
      const double dt = now_ - n.last;
      for (ActiveTransfer& a : n.active) a.remaining -= rate * dt;
    }
    n.last = now_;
  }

  void io_segment(std::size_t node, double t) {
    NodeState& n = nodes_[node];
    if (t > n.seg_start && !n.active.empty()) {
      report_.io_log.push_back({n.spec->node_id, n.seg_start, t, n.active.size(), n.spec->io_bw_Bps});
    }
    n.seg_start = t;
  }

  void io_schedule(std::size_t node) {
    NodeState& n = nodes_[node];
    if (n.active.empty()) return;
    const double rate = n.spec->io_bw_Bps / static_cast<double>(n.active.size());
    double min_rem = n.active.front().remaining;
    for (const ActiveTransfer& a : n.active) min_rem = std::min(min_rem, a.remaining);
    push(now_ + std::max(0.0, min_rem) / rate, Ev::IoCheck, node, n.version);
  }

  void io_check(std::size_t node, std::uint64_t version) {
    NodeState& n = nodes_[node];
    if (version != n.version) return;
    io_advance(n);
    io_segment(node, now_);
    std::vector<ActiveTransfer> finished;
    std::vector<ActiveTransfer> still;
    for (const ActiveTransfer& a : n.active) {
      const double tol = 1e-9 * static_cast<double>(a.bytes) + 1e-6;
      (a.remaining <= tol ? finished : still).push_back(a);
    }
    n.active = std::move(still);
    ++n.version;
    io_schedule(node);
    for (const ActiveTransfer& a : finished) {
      report_.transfers.push_back({n.spec->node_id, a.bytes, a.start, now_, a.input});
      io_done(a.inv, a.input);
    }
  }

  void io_done(std::size_t i, bool input) {
    Inv& v = invs_[i];
    if (input) {
      v.input.end = now_;
      nodes_[v.node].queue.push_back(i);
      run_queue(v.node);
    } else {
      v.output.end = now_;
      complete(i);
    }
  }

  void run_queue(std::size_t node) {
    NodeState& n = nodes_[node];
    while (!n.queue.empty()) {
      const std::size_t i = n.queue.front();
      Inv& v = invs_[i];
      if (n.cores_used + v.cpu > n.spec->cpu_cores + 1e-12) break;
      n.queue.pop_front();
      cpu_segment(node, now_);
      n.cores_used += v.cpu;
      v.exec.start = now_;
      push(now_ + v.exec_d, Ev::ExecDone, i, 0);
    }
  }

  void cpu_segment(std::size_t node, double t) {
    NodeState& n = nodes_[node];
    if (t > n.cpu_seg_start && n.cores_used > 0.0) {
      report_.cpu_log.push_back({n.spec->node_id, n.cpu_seg_start, t, n.cores_used});
    }
    n.cpu_seg_start = t;
  }

  void on_exec_done(std::size_t i) {
    Inv& v = invs_[i];
    v.exec.end = now_;
    cpu_segment(v.node, now_);
    NodeState& n = nodes_[v.node];
    n.cores_used = std::max(0.0, n.cores_used - v.cpu);
    start_io(i, false);
    run_queue(v.node);
  }

  void complete(std::size_t i) {
    Inv& v = invs_[i];
    v.end = now_;
    for (std::size_t d : v.dependents) {
      Inv& dep = invs_[d];
      dep.dep_done = std::max(dep.dep_done, now_);
      if (--dep.pending == 0) push(dep.dep_done + s_.composite_overhead_s, Ev::Ready, d, 0);
    }
    if (--requests_[v.req].remaining == 0) finish_request(v.req);
  }

  void finish_request(std::size_t req) {
    const Request& r = requests_[req];
    const SimWorkflow& wf = s_.workflows[r.wf];
    report_.per_request.push_back({wf.tree.id(), r.number, r.start, now_, now_ - r.start, r.status});
    record_invocations(req);
    const std::size_t done = ++done_requests_[r.wf];
    if (done < s_.requests_per_workflow) {
      push(now_, Ev::RequestStart, r.wf, done);
    } else if (s_.mode == SimMode::Single && r.wf + 1 < s_.workflows.size()) {
      push(now_, Ev::RequestStart, r.wf + 1, 0);
    }
  }

  void record_invocations(std::size_t req) {
    const Request& r = requests_[req];
    const WorkflowDef& t = s_.workflows[r.wf].tree;
    for (std::size_t i = next_recorded_; i < invs_.size(); ++i) {
      if (invs_[i].req != req) continue;
      const Inv& v = invs_[i];
      Invocation out;
      out.workflow_id = t.id();
      out.request_id = r.number;
      out.leaf_id = t.node(v.leaf).id;
      out.node_id = s_.cluster.nodes[v.node].node_id;
      out.ready_s = v.ready;
      out.end_s = v.end;
      out.input_bytes = v.in_bytes;
      out.output_bytes = v.out_bytes;
      out.iteration = v.iteration;
      out.status = v.status;
      out.skipped = v.skipped;
      out.synthetic = v.synthetic;
      if (!v.skipped && !v.synthetic) {
        out.gantt = report_.gantt.size();
        report_.gantt.push_back({t.id(), r.number, out.leaf_id, out.node_id, v.init, v.input, v.exec, v.output});
      }
      report_.invocations.push_back(std::move(out));
    }
    while (next_recorded_ < invs_.size() && request_closed(invs_[next_recorded_].req)) ++next_recorded_;
  }

  bool request_closed(std::size_t req) const { return requests_[req].remaining == 0; }

  const Scenario& s_;
  std::vector<NodeState> nodes_;
  std::vector<LeafNodes> placement_;
  std::vector<Profiles> profiles_;
  std::vector<ExecutorRegistry> executors_;
  std::vector<Inv> invs_;
  std::vector<Request> requests_;
  std::vector<std::size_t> done_requests_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::size_t next_recorded_ = 0;
  SimReport report_;
};

}  // namespace

SimReport simulate(const Scenario& scenario) {
  Simulator sim(scenario);
  return sim.run();
}

}  // namespace beeflow

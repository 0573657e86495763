#include "beeflow/placement.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

const NodeSpec* ClusterSpec::find(std::string_view node_id) const {
  for (const NodeSpec& n : nodes) {
    if (n.node_id == node_id) return &n;
  }
  return nullptr;
}

const NodeSpec& ClusterSpec::at(std::string_view node_id) const {
  const NodeSpec* n = find(node_id);
  if (n == nullptr) throw Error(Errc::UnknownNode, "cluster node " + std::string(node_id));
  return *n;
}

std::vector<std::string> check_cluster(const ClusterSpec& cluster) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  if (cluster.nodes.empty()) out.push_back("cluster has no nodes");
  for (const NodeSpec& n : cluster.nodes) {
    if (n.node_id.empty()) out.push_back("node with empty id");
    if (!ids.insert(n.node_id).second) out.push_back("duplicate node id " + n.node_id);
    if (!(n.cpu_cores > 0.0)) out.push_back(n.node_id + ": cpu_cores must be positive");
    if (n.mem_bytes <= 0) out.push_back(n.node_id + ": mem_bytes must be positive");
    if (!(n.io_bw_Bps > 0.0)) out.push_back(n.node_id + ": io_bw_Bps must be positive");
  }
  return out;
}

std::string qualified_id(const Subpath& sp) { return sp.workflow_id + "/" + sp.subpath_id; }

double workflow_penalty(const ExpectedTimeline& timeline, std::span<const std::string> leaves) {
  double cost = 0.0;
  for (const IoInterval& iv : io_intervals(timeline, leaves)) {
    const auto d = static_cast<double>(iv.degree);
    cost += iv.length() * d * d;
  }
  return cost;
}

double penalty(std::span<const WorkflowLeaves> on_node) {
  double cost = 0.0;
  for (const WorkflowLeaves& w : on_node) {
    if (w.timeline != nullptr) cost += workflow_penalty(*w.timeline, w.leaves);
  }
  return cost;
}

double sort_key(const Subpath& sp, const ExpectedTimeline& timeline) {
  std::vector<std::string> all;
  for (const LeafSchedule& e : timeline.entries()) all.push_back(e.leaf_id);
  const auto degrees = io_intervals(timeline, all);
  double key = 0.0;
  for (const std::string& id : sp.leaves) {
    for (const Interval& p : io_periods(timeline.at(id))) {
      for (const IoInterval& iv : degrees) {
        const double ov = std::max(0.0, std::min(p.end, iv.end) - std::max(p.start, iv.start));
        key += ov * (static_cast<double>(iv.degree) - 1.0);
      }
    }
  }
  return key;
}

// ---------------------------------------------------------------------------

std::int64_t NodeLoad::subpath_mem(const WorkflowDef& tree, const Subpath& sp) {
  std::int64_t mem = 0;
  for (const std::string& id : sp.leaves) {
    const NodeIndex l = tree.leaf_at(id);
    if (tree.node(l).synthetic) continue;
    mem += tree.function_of(l).mem_request_bytes;
  }
  return mem;
}

std::vector<std::pair<Interval, double>> NodeLoad::exec_demand(const WorkflowDef&, const ExpectedTimeline& timeline,
                                                               const Subpath& sp) {
  std::vector<std::pair<Interval, double>> out;
  for (const std::string& id : sp.leaves) {
    const LeafSchedule& e = timeline.at(id);
    if (e.exec.length() > 0.0 && e.cpu_cores > 0.0) out.emplace_back(e.exec, e.cpu_cores);
  }
  return out;
}

void NodeLoad::add(const WorkflowDef& tree, const ExpectedTimeline& timeline, const Subpath& sp) {
  mem_ += subpath_mem(tree, sp);
  auto demand = exec_demand(tree, timeline, sp);
  exec_.insert(exec_.end(), demand.begin(), demand.end());
  WorkflowLeaves& w = leaves_[sp.workflow_id];
  w.timeline = &timeline;
  w.leaves.insert(w.leaves.end(), sp.leaves.begin(), sp.leaves.end());
}

double NodeLoad::peak_cpu(std::span<const std::pair<Interval, double>> extra) const {
  std::vector<std::pair<double, double>> events;
  auto push = [&](const std::pair<Interval, double>& d) {
    events.emplace_back(d.first.start, d.second);
    events.emplace_back(d.first.end, -d.second);
  };
  for (const auto& d : exec_) push(d);
  for (const auto& d : extra) push(d);
  // Closings sort before openings at the same instant: [start, end) periods.
  std::sort(events.begin(), events.end());
  double cur = 0.0;
  double peak = 0.0;
  for (const auto& [t, delta] : events) {
    cur += delta;
    peak = std::max(peak, cur);
  }
  return peak;
}

std::vector<WorkflowLeaves> NodeLoad::by_workflow() const {
  std::vector<WorkflowLeaves> out;
  for (const auto& [_, w] : leaves_) out.push_back(w);
  return out;
}

double NodeLoad::cost() const {
  const auto w = by_workflow();
  return penalty(w);
}

bool try_place(const NodeSpec& node, const NodeLoad& load, const WorkflowDef& tree, const ExpectedTimeline& timeline,
               const Subpath& sp) {
  if (load.mem_bytes() + NodeLoad::subpath_mem(tree, sp) > node.mem_bytes) return false;
  const auto demand = NodeLoad::exec_demand(tree, timeline, sp);
  return load.peak_cpu(demand) <= node.cpu_cores + 1e-12;
}

// ---------------------------------------------------------------------------

namespace {

struct Item {
  const PlacementWorkflow* wf;
  const Subpath* sp;
  std::string qid;
  double key = 0.0;
  double bytes = 0.0;
};

std::vector<Item> collect(std::span<const PlacementWorkflow> workflows) {
  std::vector<Item> items;
  std::set<std::string> seen;
  for (const PlacementWorkflow& w : workflows) {
    if (w.tree == nullptr || w.timeline == nullptr || w.partition == nullptr) {
      throw Error(Errc::InvalidArgument, "placement input with missing workflow, timeline or partition");
    }
    for (const Subpath& sp : w.partition->subpaths) {
      Item it{&w, &sp, qualified_id(sp)};
      if (!seen.insert(it.qid).second) throw Error(Errc::InvalidArgument, "duplicate subpath " + it.qid);
      it.key = sort_key(sp, *w.timeline);
      for (const std::string& l : sp.leaves) it.bytes += w.timeline->at(l).io_bytes();
      items.push_back(std::move(it));
    }
  }
  if (items.empty()) throw Error(Errc::InvalidArgument, "no subpaths to place");
  return items;
}

int cmp_real(double a, double b) {
  const double tol = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a - b) <= tol) return 0;
  return a < b ? -1 : 1;
}

void check_inputs(const ClusterSpec& cluster) {
  if (auto problems = check_cluster(cluster); !problems.empty()) throw Error(Errc::InvalidArgument, problems.front());
}

double workflow_cost_with(const NodeLoad& load, const Item& it) {
  const ExpectedTimeline& tl = *it.wf->timeline;
  std::vector<std::string> leaves;
  for (const WorkflowLeaves& w : load.by_workflow()) {
    if (w.timeline == &tl) leaves = w.leaves;
  }
  const double before = leaves.empty() ? 0.0 : workflow_penalty(tl, leaves);
  leaves.insert(leaves.end(), it.sp->leaves.begin(), it.sp->leaves.end());
  return workflow_penalty(tl, leaves) - before;
}

void finish(PlacementPlan& plan, const ClusterSpec& cluster, const std::vector<NodeLoad>& loads) {
  plan.total_cost = 0.0;
  plan.per_node_cost.clear();
  for (std::size_t n = 0; n < cluster.nodes.size(); ++n) {
    const double c = loads[n].cost();
    plan.per_node_cost[cluster.nodes[n].node_id] = c;
    plan.total_cost += c;
  }
}

}  // namespace

PlacementPlan place(std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster) {
  check_inputs(cluster);
  std::vector<Item> items = collect(workflows);
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (int c = cmp_real(a.key, b.key); c != 0) return c > 0;
    if (int c = cmp_real(a.bytes, b.bytes); c != 0) return c > 0;
    return a.qid < b.qid;
  });

  std::vector<NodeLoad> loads(cluster.nodes.size());
  std::vector<double> costs(cluster.nodes.size(), 0.0);
  PlacementPlan plan;
  for (const Item& it : items) {
    std::optional<std::size_t> best;
    double best_total = 0.0;
    for (std::size_t n = 0; n < cluster.nodes.size(); ++n) {
      if (!try_place(cluster.nodes[n], loads[n], *it.wf->tree, *it.wf->timeline, *it.sp)) continue;
      const double total = costs[n] + workflow_cost_with(loads[n], it);
      bool take = !best;
      if (!take) {
        int c = cmp_real(total, best_total);
        if (c == 0) c = cmp_real(costs[n], costs[*best]);
        take = c < 0 || (c == 0 && cluster.nodes[n].node_id < cluster.nodes[*best].node_id);
      }
      if (take) {
        best = n;
        best_total = total;
      }
    }
    if (!best) throw Error(Errc::NoFeasibleNode, it.qid);
    loads[*best].add(*it.wf->tree, *it.wf->timeline, *it.sp);
    costs[*best] = loads[*best].cost();
    plan.assignments[it.qid] = cluster.nodes[*best].node_id;
    plan.order.push_back(it.qid);
  }
  finish(plan, cluster, loads);
  return plan;
}

PlacementPlan place_baseline(std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster, Baseline kind,
                             std::uint64_t seed) {
  check_inputs(cluster);
  const std::vector<Item> items = collect(workflows);
  const std::size_t n_nodes = cluster.nodes.size();
  std::vector<NodeLoad> loads(n_nodes);
  Rng rng(seed);
  PlacementPlan plan;
  std::size_t next = 0;
  for (const Item& it : items) {
    auto feasible = [&](std::size_t n) {
      return try_place(cluster.nodes[n], loads[n], *it.wf->tree, *it.wf->timeline, *it.sp);
    };
    std::optional<std::size_t> chosen;
    switch (kind) {
      case Baseline::RoundRobin:
        for (std::size_t k = 0; k < n_nodes && !chosen; ++k) {
          const std::size_t n = (next + k) % n_nodes;
          if (feasible(n)) chosen = n;
        }
        if (chosen) next = (*chosen + 1) % n_nodes;
        break;
      case Baseline::Random: {
        std::vector<std::size_t> ok;
        for (std::size_t n = 0; n < n_nodes; ++n) {
          if (feasible(n)) ok.push_back(n);
        }
        if (!ok.empty()) chosen = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
        break;
      }
      case Baseline::ColocateAll:
        for (std::size_t n = 0; n < n_nodes && !chosen; ++n) {
          if (feasible(n)) chosen = n;
        }
        break;
    }
    if (!chosen) throw Error(Errc::NoFeasibleNode, it.qid);
    loads[*chosen].add(*it.wf->tree, *it.wf->timeline, *it.sp);
    plan.assignments[it.qid] = cluster.nodes[*chosen].node_id;
    plan.order.push_back(it.qid);
  }
  finish(plan, cluster, loads);
  return plan;
}

void recompute_costs(PlacementPlan& plan, std::span<const PlacementWorkflow> workflows, const ClusterSpec& cluster) {
  std::vector<NodeLoad> loads(cluster.nodes.size());
  for (const Item& it : collect(workflows)) {
    auto a = plan.assignments.find(it.qid);
    if (a == plan.assignments.end()) throw Error(Errc::UnplacedLeaf, "subpath " + it.qid + " has no node");
    for (std::size_t n = 0; n < cluster.nodes.size(); ++n) {
      if (cluster.nodes[n].node_id == a->second) loads[n].add(*it.wf->tree, *it.wf->timeline, *it.sp);
    }
    if (cluster.find(a->second) == nullptr) throw Error(Errc::UnknownNode, a->second);
  }
  finish(plan, cluster, loads);
}

}  // namespace beeflow

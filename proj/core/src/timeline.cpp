#include <algorithm>
#include <cmath>

#include "beeflow/error.hpp"
#include "beeflow/trace.hpp"

namespace beeflow {

ExpectedTimeline::ExpectedTimeline(std::string workflow_id, std::vector<LeafSchedule> entries)
    : workflow_id_(std::move(workflow_id)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].leaf_id, i);
}

const LeafSchedule* ExpectedTimeline::find(std::string_view leaf_id) const {
  auto it = index_.find(leaf_id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const LeafSchedule& ExpectedTimeline::at(std::string_view leaf_id) const {
  const LeafSchedule* e = find(leaf_id);
  if (e == nullptr) throw Error(Errc::UnknownLeaf, std::string(leaf_id) + " not in timeline of " + workflow_id_);
  return *e;
}

double ExpectedTimeline::makespan() const noexcept {
  double m = 0.0;
  for (const LeafSchedule& e : entries_) m = std::max(m, e.output.end);
  return m;
}

namespace {

const FunctionProfile& profile_of(const WorkflowDef& tree, const Profiles& profiles, NodeIndex leaf) {
  const std::string& id = tree.node(leaf).id;
  auto it = profiles.functions.find(id);
  if (it == profiles.functions.end()) throw Error(Errc::MissingProfile, id + " in workflow " + tree.id());
  return it->second;
}

class Aligner {
 public:
  Aligner(const WorkflowDef& tree, const Profiles& profiles)
      : tree_(tree), profiles_(profiles), succ_(tree.size(), -1.0) {}

  double success(NodeIndex n) {
    if (succ_[n] >= 0.0) return succ_[n];
    const TreeNode& node = tree_.node(n);
    double s = 1.0;
    switch (node.kind) {
      case NodeKind::Leaf:
        s = node.synthetic ? 1.0 : 1.0 - profile_of(tree_, profiles_, n).fail_prob;
        break;
      case NodeKind::Sequence:
        for (NodeIndex c : node.children) s *= success(c);
        break;
      case NodeKind::Fallback: {
        double all_fail = 1.0;
        for (NodeIndex c : node.children) all_fail *= 1.0 - success(c);
        s = 1.0 - all_fail;
        break;
      }
      case NodeKind::Parallel:
        s = parallel_success(node);
        break;
      case NodeKind::Decorator: {
        const double c = success(node.children.front());
        switch (node.tail.kind) {
          case TailSpec::Kind::Negate: s = 1.0 - c; break;
          case TailSpec::Kind::Retry: s = 1.0 - std::pow(1.0 - c, std::max(1, node.tail.max_n)); break;
          default: s = c; break;
        }
        break;
      }
    }
    succ_[n] = std::clamp(s, 0.0, 1.0);
    return succ_[n];
  }

  double iterations(NodeIndex d) {
    const TreeNode& node = tree_.node(d);
    if (auto it = profiles_.loops.find(node.id); it != profiles_.loops.end()) {
      return std::max(1.0, it->second.expected_iterations);
    }
    if (node.tail.kind == TailSpec::Kind::Retry) {
      const double q = 1.0 - success(node.children.front());
      double expected = 0.0;
      double term = 1.0;
      for (int k = 0; k < std::max(1, node.tail.max_n); ++k) {
        expected += term;
        term *= q;
      }
      return expected;
    }
    return 1.0;
  }

  double lay(NodeIndex n, double start, double scale, double reach) {
    const TreeNode& node = tree_.node(n);
    switch (node.kind) {
      case NodeKind::Leaf: return lay_leaf(n, start, scale, reach);
      case NodeKind::Sequence:
      case NodeKind::Fallback: {
        double t = start;
        double r = reach;
        for (NodeIndex c : node.children) {
          t = lay(c, t, scale, r);
          const double s = success(c);
          r *= node.kind == NodeKind::Sequence ? s : 1.0 - s;
        }
        return t;
      }
      case NodeKind::Parallel: {
        double end = start;
        for (NodeIndex c : node.children) end = std::max(end, lay(c, start, scale, reach));
        return end;
      }
      case NodeKind::Decorator: return lay(node.children.front(), start, scale * iterations(n), reach);
    }
    return start;
  }

  std::vector<LeafSchedule> take() { return std::move(out_); }

 private:
  double parallel_success(const TreeNode& node) {
    if (node.agg.kind == AggSpec::Kind::Named && node.agg.name == "flat") return 1.0;
    if (node.agg.kind == AggSpec::Kind::MOutOfN) {
      // dist[k] = P(exactly k children succeed)
      std::vector<double> dist{1.0};
      for (NodeIndex c : node.children) {
        const double p = success(c);
        std::vector<double> next(dist.size() + 1, 0.0);
        for (std::size_t k = 0; k < dist.size(); ++k) {
          next[k] += dist[k] * (1.0 - p);
          next[k + 1] += dist[k] * p;
        }
        dist = std::move(next);
      }
      double s = 0.0;
      for (std::size_t k = static_cast<std::size_t>(std::max(0, node.agg.m)); k < dist.size(); ++k) s += dist[k];
      return s;
    }
    double s = 1.0;
    for (NodeIndex c : node.children) s *= success(c);
    return s;
  }

  double lay_leaf(NodeIndex n, double start, double scale, double reach) {
    const FunctionProfile& p = profile_of(tree_, profiles_, n);
    const double prob = p.defaulted ? reach : p.exec_prob;
    const double f = prob * scale;
    LeafSchedule e;
    e.leaf = n;
    e.leaf_id = tree_.node(n).id;
    double t = start;
    auto period = [&](double d) {
      Interval iv{t, t + f * d};
      t = iv.end;
      return iv;
    };
    e.init = period(p.init_delay_s);
    e.input = period(p.input_delay_s);
    e.exec = period(p.exec_delay_s);
    e.output = period(p.output_delay_s);
    e.input_bytes = f * p.input_bytes;
    e.output_bytes = f * p.output_bytes;
    e.reach = prob;
    const FunctionSpec* fs = tree_.function(tree_.node(n).function_id);
    e.cpu_cores = fs != nullptr && !tree_.node(n).synthetic ? fs->cpu_request_cores : 0.0;
    out_.push_back(std::move(e));
    return t;
  }

  const WorkflowDef& tree_;
  const Profiles& profiles_;
  std::vector<double> succ_;
  std::vector<LeafSchedule> out_;
};

}  // namespace

ExpectedTimeline align(const WorkflowDef& tree, const Profiles& profiles) {
  if (tree.size() == 0) throw Error(Errc::EmptyTree, "workflow " + tree.id() + " has no nodes");
  for (NodeIndex l : tree.leaves()) profile_of(tree, profiles, l);
  Aligner a(tree, profiles);
  a.lay(WorkflowDef::root(), 0.0, 1.0, 1.0);
  return ExpectedTimeline(tree.id(), a.take());
}

double success_probability(const WorkflowDef& tree, const Profiles& profiles, NodeIndex n) {
  Aligner a(tree, profiles);
  return a.success(n);
}

std::vector<Interval> io_periods(const LeafSchedule& entry) {
  std::vector<Interval> out;
  if (entry.input.length() > 0.0) out.push_back(entry.input);
  if (entry.output.length() > 0.0) out.push_back(entry.output);
  return out;
}

std::vector<IoInterval> io_intervals(const ExpectedTimeline& timeline, std::span<const std::string> leaf_subset) {
  // (coordinate, +1 open / -1 close)
  std::vector<std::pair<double, int>> events;
  for (const std::string& id : leaf_subset) {
    for (const Interval& iv : io_periods(timeline.at(id))) {
      events.emplace_back(iv.start, +1);
      events.emplace_back(iv.end, -1);
    }
  }
  std::sort(events.begin(), events.end());
  std::vector<IoInterval> out;
  long depth = 0;
  for (std::size_t i = 0; i < events.size();) {
    const double x = events[i].first;
    while (i < events.size() && events[i].first == x) depth += events[i++].second;
    if (i == events.size() || depth == 0) continue;
    const double next = events[i].first;
    const auto degree = static_cast<std::size_t>(depth);
    if (!out.empty() && out.back().end == x && out.back().degree == degree) {
      out.back().end = next;
    } else {
      out.push_back({x, next, degree});
    }
  }
  return out;
}

}  // namespace beeflow

#include "beeflow/paths.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

bool orders_children(NodeKind k) { return k == NodeKind::Sequence || k == NodeKind::Fallback; }

/// raw path of `node` computed with `context` as root.
std::vector<NodeIndex> raw_within(const WorkflowDef& tree, NodeIndex context, NodeIndex node) {
  std::vector<NodeIndex> rev;
  NodeIndex cur = node;
  while (true) {
    rev.push_back(cur);
    if (cur == context) break;
    const TreeNode& n = tree.node(cur);
    if (!n.parent) break;
    const TreeNode& p = tree.node(*n.parent);
    cur = (n.child_pos > 0 && orders_children(p.kind)) ? p.children[n.child_pos - 1] : *n.parent;
  }
  std::reverse(rev.begin(), rev.end());
  return rev;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > std::numeric_limits<std::uint64_t>::max() / b) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

class Expander {
 public:
  Expander(const WorkflowDef& tree, const ExpandOptions& opt) : tree_(tree), opt_(opt) {}

  std::uint64_t count_target(NodeIndex context, NodeIndex target) {
    std::uint64_t c = 1;
    for (NodeIndex n : raw_within(tree_, context, target)) {
      if (tree_.node(n).is_leaf() || tree_.is_ancestor(n, target)) continue;
      c = sat_mul(c, count_subtree(n));
    }
    return c;
  }

  std::vector<std::vector<NodeIndex>> enumerate_target(NodeIndex context, NodeIndex target) {
    std::vector<std::vector<NodeIndex>> acc{{}};
    for (NodeIndex n : raw_within(tree_, context, target)) {
      if (tree_.node(n).is_leaf()) {
        for (auto& p : acc) p.push_back(n);
      } else if (!tree_.is_ancestor(n, target)) {
        const auto& options = enumerate_subtree(n);
        std::vector<std::vector<NodeIndex>> next;
        next.reserve(acc.size() * options.size());
        for (const auto& head : acc) {
          for (const auto& tail : options) {
            auto p = head;
            p.insert(p.end(), tail.begin(), tail.end());
            next.push_back(std::move(p));
          }
        }
        acc = std::move(next);
      }
    }
    return acc;
  }

  std::vector<NodeIndex> greedy_target(NodeIndex context, NodeIndex target) {
    std::vector<NodeIndex> path;
    for (NodeIndex n : raw_within(tree_, context, target)) {
      if (tree_.node(n).is_leaf()) {
        path.push_back(n);
      } else if (!tree_.is_ancestor(n, target)) {
        const auto& best = greedy_subtree(n);
        path.insert(path.end(), best.begin(), best.end());
      }
    }
    return path;
  }

 private:
  std::uint64_t count_subtree(NodeIndex c) {
    if (auto it = counts_.find(c); it != counts_.end()) return it->second;
    std::uint64_t total = 0;
    for (NodeIndex l : tree_.leaves_under(c)) total = sat_add(total, count_target(c, l));
    counts_.emplace(c, total);
    return total;
  }

  const std::vector<std::vector<NodeIndex>>& enumerate_subtree(NodeIndex c) {
    if (auto it = enumerated_.find(c); it != enumerated_.end()) return it->second;
    std::vector<std::vector<NodeIndex>> all;
    for (NodeIndex l : tree_.leaves_under(c)) {
      auto part = enumerate_target(c, l);
      all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return enumerated_.emplace(c, std::move(all)).first->second;
  }

  double weight(const std::vector<NodeIndex>& path) const {
    double w = 0.0;
    for (NodeIndex l : path) w += opt_.leaf_weight ? opt_.leaf_weight(l) : 1.0;
    return w;
  }

  const std::vector<NodeIndex>& greedy_subtree(NodeIndex c) {
    if (auto it = greedy_.find(c); it != greedy_.end()) return it->second;
    std::vector<NodeIndex> best;
    double best_w = -1.0;
    std::vector<std::string> best_ids;
    for (NodeIndex l : tree_.leaves_under(c)) {
      auto cand = greedy_target(c, l);
      const double w = weight(cand);
      auto ids = leaf_ids(tree_, cand);
      std::sort(ids.begin(), ids.end());
      if (w > best_w || (w == best_w && ids < best_ids)) {
        best = std::move(cand);
        best_w = w;
        best_ids = std::move(ids);
      }
    }
    return greedy_.emplace(c, std::move(best)).first->second;
  }

  const WorkflowDef& tree_;
  const ExpandOptions& opt_;
  std::map<NodeIndex, std::uint64_t> counts_;
  std::map<NodeIndex, std::vector<std::vector<NodeIndex>>> enumerated_;
  std::map<NodeIndex, std::vector<NodeIndex>> greedy_;
};

void check_node(const WorkflowDef& tree, NodeIndex node) {
  if (node >= tree.size()) throw Error(Errc::UnknownNode, "index " + std::to_string(node));
}

}  // namespace

std::vector<NodeIndex> raw_path(const WorkflowDef& tree, NodeIndex node) {
  check_node(tree, node);
  return raw_within(tree, WorkflowDef::root(), node);
}

std::vector<NodeIndex> raw_path(const WorkflowDef& tree, std::string_view node_id) {
  return raw_path(tree, tree.at(node_id));
}

std::vector<NodeIndex> prefix(const WorkflowDef& tree, NodeIndex node) {
  auto raw = raw_path(tree, node);
  if (tree.node(node).is_leaf()) raw.pop_back();
  return raw;
}

std::vector<NodeIndex> prefix(const WorkflowDef& tree, std::string_view node_id) {
  return prefix(tree, tree.at(node_id));
}

bool same_prefix(const WorkflowDef& tree, std::string_view leaf_a, std::string_view leaf_b) {
  const NodeIndex a = tree.leaf_at(leaf_a);
  const NodeIndex b = tree.leaf_at(leaf_b);
  const auto pa = prefix(tree, a);
  if (pa != prefix(tree, b)) return false;
  // A composite in a prefix is either still open (an ancestor) or finished.
  // Equal node lists with different roles start at different times.
  return std::all_of(pa.begin(), pa.end(),
                     [&](NodeIndex n) { return tree.is_ancestor(n, a) == tree.is_ancestor(n, b); });
}

std::uint64_t count_paths(const WorkflowDef& tree, NodeIndex node) {
  check_node(tree, node);
  ExpandOptions opt;
  Expander ex(tree, opt);
  return ex.count_target(WorkflowDef::root(), node);
}

std::vector<std::vector<NodeIndex>> expand_paths(const WorkflowDef& tree, NodeIndex node,
                                                 const ExpandOptions& options) {
  check_node(tree, node);
  Expander ex(tree, options);
  const std::size_t cap = std::max<std::size_t>(options.cap, 1);
  std::vector<std::vector<NodeIndex>> out;
  if (ex.count_target(WorkflowDef::root(), node) <= cap) {
    out = ex.enumerate_target(WorkflowDef::root(), node);
  } else {
    out.push_back(ex.greedy_target(WorkflowDef::root(), node));
  }
  for (auto& p : out) {
    // Expansions cover disjoint subtrees, so this only guards malformed input.
    std::set<NodeIndex> seen;
    p.erase(std::remove_if(p.begin(), p.end(), [&](NodeIndex l) { return !seen.insert(l).second; }), p.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool precedes(const WorkflowDef& tree, NodeIndex a, NodeIndex b) {
  check_node(tree, a);
  check_node(tree, b);
  if (a == b || tree.is_ancestor(a, b) || tree.is_ancestor(b, a)) return false;
  NodeIndex x = a;
  NodeIndex y = b;
  while (tree.node(x).depth > tree.node(y).depth) x = *tree.node(x).parent;
  while (tree.node(y).depth > tree.node(x).depth) y = *tree.node(y).parent;
  while (tree.node(x).parent != tree.node(y).parent) {
    x = *tree.node(x).parent;
    y = *tree.node(y).parent;
  }
  const TreeNode& lca = tree.node(*tree.node(x).parent);
  return orders_children(lca.kind) && tree.node(x).child_pos < tree.node(y).child_pos;
}

bool is_valid_subpath(const WorkflowDef& tree, std::span<const NodeIndex> leaves) {
  if (leaves.empty()) return false;
  for (NodeIndex l : leaves) {
    check_node(tree, l);
    if (!tree.node(l).is_leaf()) return false;
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      if (!precedes(tree, leaves[i], leaves[j])) return false;
    }
  }
  return true;
}

bool is_valid_subpath(const WorkflowDef& tree, std::span<const std::string> leaf_ids) {
  std::vector<NodeIndex> idx;
  idx.reserve(leaf_ids.size());
  for (const auto& id : leaf_ids) idx.push_back(tree.at(id));
  return is_valid_subpath(tree, idx);
}

std::vector<bool> check_exclusivity_all(const WorkflowDef& tree, std::span<const std::vector<NodeIndex>> subpaths,
                                        const ExecutorRegistry& executors, std::size_t trials,
                                        std::uint64_t rng_seed, const DurationFn& duration) {
  std::vector<bool> ok(subpaths.size(), true);
  // leaf -> subpaths containing it
  std::vector<std::vector<std::size_t>> member(tree.size());
  for (std::size_t s = 0; s < subpaths.size(); ++s) {
    for (NodeIndex l : subpaths[s]) member.at(l).push_back(s);
  }
  ExecOptions opt;
  opt.max_invocations = 20'000;
  opt.duration = duration ? duration : DurationFn([](const LeafCall& c, Rng& rng) {
    if (c.workflow.node(c.leaf).synthetic) return 0.0;
    return std::uniform_real_distribution<double>(0.5, 1.5)(rng);
  });

  struct Interval {
    double start, end;
    NodeIndex leaf;
  };
  for (std::size_t t = 0; t < trials; ++t) {
    const ExecResult r = execute(tree, Payload{}, executors, derive_seed(rng_seed, t), opt);
    std::vector<std::vector<Interval>> per(subpaths.size());
    for (const LogEntry& e : r.log.entries) {
      if (e.skipped || !(e.end > e.start)) continue;
      for (std::size_t s : member[e.leaf]) per[s].push_back({e.start, e.end, e.leaf});
    }
    for (std::size_t s = 0; s < subpaths.size(); ++s) {
      if (!ok[s]) continue;
      auto& iv = per[s];
      std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) {
        return x.start < y.start || (x.start == y.start && x.end < y.end);
      });
      double reach = -std::numeric_limits<double>::infinity();
      for (const Interval& i : iv) {
        if (i.start < reach) {
          ok[s] = false;
          break;
        }
        reach = std::max(reach, i.end);
      }
    }
  }
  return ok;
}

bool check_exclusivity(const WorkflowDef& tree, std::span<const NodeIndex> leaves, const ExecutorRegistry& executors,
                       std::size_t trials, std::uint64_t rng_seed, const DurationFn& duration) {
  std::vector<std::vector<NodeIndex>> one{std::vector<NodeIndex>(leaves.begin(), leaves.end())};
  return check_exclusivity_all(tree, one, executors, trials, rng_seed, duration).front();
}

std::vector<std::string> leaf_ids(const WorkflowDef& tree, std::span<const NodeIndex> leaves) {
  std::vector<std::string> out;
  out.reserve(leaves.size());
  for (NodeIndex l : leaves) out.push_back(tree.node(l).id);
  return out;
}

std::vector<NodeIndex> leaf_indices(const WorkflowDef& tree, std::span<const std::string> ids) {
  std::vector<NodeIndex> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(tree.leaf_at(id));
  return out;
}

}  // namespace beeflow

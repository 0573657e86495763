#include "beeflow/partition.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "beeflow/error.hpp"

namespace beeflow {

PartitionPolicy parse_policy(std::string_view text) {
  if (text == "io-contention" || text == "io-contention-aware") return PartitionPolicy::io_contention();
  if (text == "longest-path") return PartitionPolicy::longest_path();
  return PartitionPolicy::named(std::string(text));
}

std::string to_string(const PartitionPolicy& p) {
  switch (p.kind) {
    case PartitionPolicy::Kind::IoContentionAware: return "io-contention";
    case PartitionPolicy::Kind::LongestPath: return "longest-path";
    case PartitionPolicy::Kind::Named: return p.name;
  }
  return "io-contention";
}

void PolicyRegistry::add(std::string name, PolicyFn fn) { fns_.insert_or_assign(std::move(name), std::move(fn)); }

const PolicyFn* PolicyRegistry::find(std::string_view name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : &it->second;
}

namespace {

double overlap(const Interval& a, double s, double e) { return std::max(0.0, std::min(a.end, e) - std::max(a.start, s)); }

/// -1 / 0 / +1 with relative tolerance.
int cmp_real(double a, double b) {
  const double tol = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a - b) <= tol) return 0;
  return a < b ? -1 : 1;
}

const PolicyFn& named_policy(const PartitionPolicy& policy, const PolicyRegistry* registry) {
  const PolicyFn* fn = registry != nullptr ? registry->find(policy.name) : nullptr;
  if (fn == nullptr) throw Error(Errc::PolicyNotRegistered, policy.name);
  return *fn;
}

}  // namespace

double PhaseContext::peak_overlap(std::string_view leaf_id) const {
  double total = 0.0;
  for (const Interval& iv : io_periods(timeline.at(leaf_id))) {
    for (const IoInterval& p : peaks) total += overlap(iv, p.start, p.end);
  }
  return total;
}

PhaseContext make_phase(const ExpectedTimeline& timeline, std::vector<std::string> residual) {
  PhaseContext ctx{timeline, std::move(residual), {}, 0};
  const auto all = io_intervals(timeline, ctx.residual);
  for (const IoInterval& iv : all) ctx.peak_degree = std::max(ctx.peak_degree, iv.degree);
  for (const IoInterval& iv : all) {
    if (iv.degree == ctx.peak_degree) ctx.peaks.push_back(iv);
  }
  return ctx;
}

CandidateScore score_candidate(std::span<const std::string> candidate, const PhaseContext& phase,
                               const PartitionPolicy& policy, const PolicyRegistry* registry) {
  CandidateScore s;
  s.leaves.assign(candidate.begin(), candidate.end());
  s.length = candidate.size();
  bool have_anchor = false;
  for (const std::string& id : candidate) {
    const LeafSchedule& e = phase.timeline.at(id);
    const double ov = phase.peak_overlap(id);
    const double bytes = e.io_bytes();
    s.peak_overlap += ov;
    s.io_bytes += bytes;
    s.busy_s += e.busy_s();
    int c = have_anchor ? cmp_real(ov, s.anchor_overlap) : 1;
    if (c == 0) c = cmp_real(bytes, s.anchor_bytes);
    if (c == 0) c = id < s.anchor_id ? 1 : -1;
    if (c > 0) {
      s.anchor_overlap = ov;
      s.anchor_bytes = bytes;
      s.anchor_id = id;
      have_anchor = true;
    }
  }
  if (policy.kind == PartitionPolicy::Kind::Named) s.custom = named_policy(policy, registry)(candidate, phase);
  return s;
}

bool better(const CandidateScore& a, const CandidateScore& b, const PartitionPolicy& policy) {
  if (policy.kind == PartitionPolicy::Kind::LongestPath) {
    if (a.length != b.length) return a.length > b.length;
    return a.leaves < b.leaves;
  }
  if (policy.kind == PartitionPolicy::Kind::Named) {
    const std::size_t n = std::min(a.custom.size(), b.custom.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (int c = cmp_real(a.custom[i], b.custom[i]); c != 0) return c > 0;
    }
  }
  if (int c = cmp_real(a.anchor_overlap, b.anchor_overlap); c != 0) return c > 0;
  if (int c = cmp_real(a.anchor_bytes, b.anchor_bytes); c != 0) return c > 0;
  if (a.anchor_id != b.anchor_id) return a.anchor_id < b.anchor_id;
  if (int c = cmp_real(a.peak_overlap, b.peak_overlap); c != 0) return c > 0;
  if (int c = cmp_real(a.io_bytes, b.io_bytes); c != 0) return c > 0;
  if (int c = cmp_real(a.busy_s, b.busy_s); c != 0) return c > 0;
  if (a.length != b.length) return a.length < b.length;
  return a.leaves < b.leaves;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<BtNode> prune(const WorkflowDef& tree, NodeIndex n, const std::vector<bool>& keep) {
  const TreeNode& t = tree.node(n);
  if (t.is_leaf()) {
    if (!keep.at(n)) return std::nullopt;
    return tree.to_bt(n);
  }
  BtNode b;
  b.kind = t.kind;
  b.id = t.id;
  b.agg = t.agg;
  b.tail = t.tail;
  for (NodeIndex c : t.children) {
    if (auto kid = prune(tree, c, keep)) b.children.push_back(std::move(*kid));
  }
  if (b.children.empty()) return std::nullopt;
  return b;
}

/// Ordinary leaves near `s`, closest first: siblings at increasing distance
/// (earlier one first), then the same one level up.
std::vector<NodeIndex> nearby_leaves(const WorkflowDef& tree, NodeIndex s) {
  std::vector<NodeIndex> out;
  auto edge_leaf = [&](NodeIndex root, bool last) -> std::optional<NodeIndex> {
    auto leaves = tree.leaves_under(root);
    if (last) std::reverse(leaves.begin(), leaves.end());
    for (NodeIndex l : leaves) {
      if (!tree.node(l).synthetic) return l;
    }
    return std::nullopt;
  };
  NodeIndex cur = s;
  while (auto parent = tree.node(cur).parent) {
    const auto& kids = tree.node(*parent).children;
    const std::size_t pos = tree.node(cur).child_pos;
    for (std::size_t d = 1; d < kids.size(); ++d) {
      if (pos >= d) {
        if (auto l = edge_leaf(kids[pos - d], true)) out.push_back(*l);
      }
      if (pos + d < kids.size()) {
        if (auto l = edge_leaf(kids[pos + d], false)) out.push_back(*l);
      }
    }
    cur = *parent;
  }
  return out;
}

}  // namespace

WorkflowDef residual_tree(const WorkflowDef& tree, const std::vector<bool>& keep) {
  if (tree.size() == 0) return {};
  auto root = prune(tree, WorkflowDef::root(), keep);
  if (!root) return {};
  std::vector<FunctionSpec> fns(tree.function_list().begin(), tree.function_list().end());
  WorkflowDef out(tree.id(), *root, std::move(fns));
  out.set_converted_from(tree.converted_from());
  return out;
}

PartitionResult partition(const WorkflowDef& tree, const Profiles& profiles, const PartitionOptions& options) {
  if (tree.size() == 0 || tree.leaves().empty()) throw Error(Errc::EmptyTree, "workflow " + tree.id());
  if (options.policy.kind == PartitionPolicy::Kind::Named) named_policy(options.policy, options.registry);

  const ExpectedTimeline timeline = align(tree, profiles);
  std::vector<bool> keep(tree.size(), false);
  std::size_t remaining = 0;
  for (NodeIndex l : tree.leaves()) {
    keep[l] = !tree.node(l).synthetic;
    remaining += keep[l] ? 1 : 0;
  }

  PartitionResult result;
  result.workflow_id = tree.id();
  std::vector<std::vector<NodeIndex>> groups;
  std::vector<std::size_t> group_of(tree.size(), SIZE_MAX);

  while (remaining > 0) {
    const WorkflowDef res = residual_tree(tree, keep);
    std::vector<std::string> residual_ids = leaf_ids(res, res.leaves());
    const PhaseContext phase = make_phase(timeline, residual_ids);

    ExpandOptions eo = options.expand;
    eo.leaf_weight = [&](NodeIndex i) { return timeline.at(res.node(i).id).io_bytes(); };
    std::set<std::vector<std::string>> candidates;
    for (NodeIndex q : res.leaves()) {
      for (const auto& p : expand_paths(res, q, eo)) candidates.insert(leaf_ids(res, p));
    }

    std::optional<CandidateScore> best;
    for (const auto& c : candidates) {
      CandidateScore s = score_candidate(c, phase, options.policy, options.registry);
      if (!best || better(s, *best, options.policy)) best = std::move(s);
    }

    std::vector<NodeIndex> chosen = leaf_indices(tree, best->leaves);
    for (NodeIndex l : chosen) {
      keep[l] = false;
      group_of[l] = groups.size();
      --remaining;
    }
    groups.push_back(std::move(chosen));
    ++result.residual_phases;
  }

  for (NodeIndex s : tree.leaves()) {
    if (!tree.node(s).synthetic) continue;
    bool placed = false;
    for (NodeIndex near : nearby_leaves(tree, s)) {
      const std::size_t g = group_of[near];
      if (g == SIZE_MAX) continue;
      std::vector<NodeIndex> trial = groups[g];
      trial.push_back(s);
      std::sort(trial.begin(), trial.end());
      if (is_valid_subpath(tree, trial)) {
        groups[g] = std::move(trial);
        group_of[s] = g;
        placed = true;
        break;
      }
    }
    if (!placed) {
      group_of[s] = groups.size();
      groups.push_back({s});
    }
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::sort(groups[g].begin(), groups[g].end());
    result.subpaths.push_back({"sp" + std::to_string(g + 1), tree.id(), leaf_ids(tree, groups[g])});
  }
  return result;
}

}  // namespace beeflow

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "beeflow/bench.hpp"
#include "beeflow/error.hpp"
#include "beeflow/paths.hpp"
#include "support.hpp"

using namespace beeflow;

namespace {

using Path = std::vector<NodeIndex>;

// Every leaf sequence one execution can pass through: sequence and fallback
// concatenate one path per child, a parallel picks one branch.
std::vector<Path> full_paths(const WorkflowDef& t, NodeIndex n) {
  const TreeNode& node = t.node(n);
  if (node.is_leaf()) return {{n}};
  if (node.kind == NodeKind::Parallel) {
    std::vector<Path> out;
    for (NodeIndex c : node.children) {
      auto sub = full_paths(t, c);
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  if (node.kind == NodeKind::Decorator) return full_paths(t, node.children.at(0));
  std::vector<Path> acc{{}};
  for (NodeIndex c : node.children) {
    std::vector<Path> next;
    for (const Path& head : acc) {
      for (const Path& tail : full_paths(t, c)) {
        Path p = head;
        p.insert(p.end(), tail.begin(), tail.end());
        next.push_back(std::move(p));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

// Raw path of n with `context` standing in for the root.
Path my_raw(const WorkflowDef& t, NodeIndex context, NodeIndex n) {
  const TreeNode& node = t.node(n);
  Path out;
  if (n != context && node.parent) {
    const TreeNode& p = t.node(*node.parent);
    const bool ordered = p.kind == NodeKind::Sequence || p.kind == NodeKind::Fallback;
    out = my_raw(t, context, ordered && node.child_pos > 0 ? p.children[node.child_pos - 1] : *node.parent);
  }
  out.push_back(n);
  return out;
}

std::set<Path> expansions_within(const WorkflowDef& t, NodeIndex context, NodeIndex target);

// A composite stands for a path to any one of its leaves.
std::set<Path> any_leaf(const WorkflowDef& t, NodeIndex c) {
  std::set<Path> out;
  for (NodeIndex l = c; l < t.node(c).end; ++l) {
    if (!t.node(l).is_leaf()) continue;
    auto sub = expansions_within(t, c, l);
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

std::set<Path> expansions_within(const WorkflowDef& t, NodeIndex context, NodeIndex target) {
  std::set<Path> acc{{}};
  for (NodeIndex n : my_raw(t, context, target)) {
    if (t.is_ancestor(n, target)) continue;
    const std::set<Path> choices = t.node(n).is_leaf() ? std::set<Path>{{n}} : any_leaf(t, n);
    std::set<Path> next;
    for (const Path& head : acc) {
      for (const Path& tail : choices) {
        Path p = head;
        p.insert(p.end(), tail.begin(), tail.end());
        next.insert(std::move(p));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

std::set<Path> oracle_expansions(const WorkflowDef& t, NodeIndex node) { return expansions_within(t, t.root(), node); }

bool oracle_valid(const WorkflowDef& t, const Path& leaves) {
  if (leaves.empty()) return false;
  for (const Path& fp : full_paths(t, t.root())) {
    std::size_t j = 0;
    for (NodeIndex x : fp) {
      if (j < leaves.size() && x == leaves[j]) ++j;
    }
    if (j == leaves.size()) return true;
  }
  return false;
}

std::vector<std::string> ids(const WorkflowDef& t, const Path& p) { return leaf_ids(t, p); }

}  // namespace

TEST(RawPath, T1) {
  const WorkflowDef t = bundled::t1();
  auto names = [&](const Path& p) {
    std::vector<std::string> out;
    for (NodeIndex n : p) out.push_back(t.node(n).id);
    return out;
  };
  EXPECT_EQ(names(raw_path(t, "f6")), (std::vector<std::string>{"root", "f1", "par", "right", "f5", "f6"}));
  EXPECT_EQ(names(raw_path(t, "f3")), (std::vector<std::string>{"root", "f1", "par", "sel", "f3"}));
  EXPECT_EQ(names(prefix(t, "f6")), (std::vector<std::string>{"root", "f1", "par", "right", "f5"}));
  EXPECT_EQ(names(prefix(t, "sel")), (std::vector<std::string>{"root", "f1", "par", "sel"}));
  EXPECT_THROW(raw_path(t, "zz"), Error);
}

TEST(ExpandPaths, T1) {
  const WorkflowDef t = bundled::t1();
  std::set<std::vector<std::string>> got;
  for (const Path& p : expand_paths(t, t.at("f4"))) got.insert(ids(t, p));
  // the parallel before the fallback expands to a path ending at any of its leaves
  EXPECT_EQ(got, (std::set<std::vector<std::string>>{{"f1", "f2", "f3", "f4"},
                                                      {"f1", "f2", "f8", "f3", "f4"},
                                                      {"f1", "f5", "f3", "f4"},
                                                      {"f1", "f5", "f6", "f3", "f4"},
                                                      {"f1", "f5", "f6", "f7", "f3", "f4"}}));
  EXPECT_EQ(count_paths(t, t.at("f4")), 5u);
  std::set<std::vector<std::string>> f3;
  for (const Path& p : expand_paths(t, t.at("f3"))) f3.insert(ids(t, p));
  EXPECT_TRUE(f3.count({"f1", "f2", "f8", "f3"}));
  EXPECT_EQ(count_paths(t, t.at("f6")), 1u);
}

TEST(SamePrefix, Basics) {
  WorkflowDef t("w", sequence({leaf("a"), parallel({leaf("b"), leaf("c")}, AggSpec::all_succeed(), "p"), leaf("d")}));
  EXPECT_TRUE(same_prefix(t, "b", "c"));
  EXPECT_FALSE(same_prefix(t, "a", "b"));
  EXPECT_FALSE(same_prefix(t, "b", "d"));
  EXPECT_THROW(same_prefix(t, "p", "b"), Error);
  const WorkflowDef t1 = bundled::t1();
  EXPECT_FALSE(same_prefix(t1, "f2", "f5"));  // first leaves of different branches
}

TEST(Precedes, T1) {
  const WorkflowDef t = bundled::t1();
  auto p = [&](const char* a, const char* b) { return precedes(t, t.at(a), t.at(b)); };
  EXPECT_TRUE(p("f1", "f8"));
  EXPECT_TRUE(p("f7", "f3"));
  EXPECT_TRUE(p("f3", "f4"));
  EXPECT_FALSE(p("f2", "f6"));
  EXPECT_FALSE(p("f4", "f3"));
  EXPECT_FALSE(p("f1", "f1"));
}

TEST(ValidSubpath, T1) {
  const WorkflowDef t = bundled::t1();
  const std::vector<std::string> good{"f1", "f2", "f8", "f3"}, bad{"f2", "f5"}, reversed{"f8", "f2"};
  EXPECT_TRUE(is_valid_subpath(t, std::span<const std::string>(good)));
  EXPECT_FALSE(is_valid_subpath(t, std::span<const std::string>(bad)));
  EXPECT_FALSE(is_valid_subpath(t, std::span<const std::string>(reversed)));
  EXPECT_FALSE(is_valid_subpath(t, std::span<const NodeIndex>()));
  const std::vector<std::string> unknown{"zz"};
  EXPECT_THROW(is_valid_subpath(t, std::span<const std::string>(unknown)), Error);
}

TEST(ExpandPaths, MatchesRecursiveOracleOnRandomTrees) {
  Rng rng(77);
  bench::TreeGenOptions opt;
  opt.max_nodes = 18;
  for (int i = 0; i < 150; ++i) {
    const WorkflowDef t = bench::random_tree(rng, opt);
    for (NodeIndex n = 0; n < t.size(); ++n) {
      const auto got = expand_paths(t, n);
      const std::set<Path> want = oracle_expansions(t, n);
      if (want.size() > 4096) continue;
      EXPECT_EQ(std::set<Path>(got.begin(), got.end()), want) << "tree " << i << " node " << t.node(n).id;
      EXPECT_EQ(count_paths(t, n), want.size());
      for (const Path& p : got) {
        EXPECT_TRUE(is_valid_subpath(t, p));
        EXPECT_TRUE(oracle_valid(t, p));
      }
    }
  }
}

TEST(ExpandPaths, ParallelOfTwoLeaves) {
  WorkflowDef t("w", sequence({parallel({leaf("a"), leaf("b")}, AggSpec::all_succeed(), "p"), leaf("c")}));
  EXPECT_EQ(expand_paths(t, t.at("c")).size(), 2u);
  WorkflowDef single("w", leaf("x"));
  EXPECT_EQ(expand_paths(single, 0), (std::vector<Path>{{0}}));
}

TEST(ExpandPaths, GreedyBeyondCap) {
  const WorkflowDef t = bundled::t1();
  ExpandOptions opt;
  opt.cap = 1;
  opt.leaf_weight = [&](NodeIndex l) { return t.node(l).id == "f6" ? 10.0 : 1.0; };
  const auto got = expand_paths(t, t.at("f4"), opt);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(ids(t, got[0]), (std::vector<std::string>{"f1", "f5", "f6", "f7", "f3", "f4"}));
}

TEST(ValidSubpath, MatchesSubsequenceOracle) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const WorkflowDef t = bench::random_tree(rng);
    auto leaves = std::vector<NodeIndex>(t.leaves().begin(), t.leaves().end());
    for (int k = 0; k < 20; ++k) {
      std::shuffle(leaves.begin(), leaves.end(), rng);
      const std::size_t len = 1 + rng() % std::min<std::size_t>(leaves.size(), 4);
      Path cand(leaves.begin(), leaves.begin() + static_cast<std::ptrdiff_t>(len));
      if (rng() % 2) std::sort(cand.begin(), cand.end());
      EXPECT_EQ(is_valid_subpath(t, cand), oracle_valid(t, cand));
    }
  }
}

TEST(Exclusivity, T1) {
  const WorkflowDef t = bundled::t1();
  const auto reg = ExecutorRegistry::with_builtins();
  const Path chain = leaf_indices(t, std::vector<std::string>{"f1", "f5", "f6", "f7", "f3", "f4"});
  const Path across = leaf_indices(t, std::vector<std::string>{"f2", "f5"});
  EXPECT_TRUE(check_exclusivity(t, chain, reg, 50, 1));
  EXPECT_FALSE(check_exclusivity(t, across, reg, 50, 1));
  const std::vector<Path> both{chain, across};
  EXPECT_EQ(check_exclusivity_all(t, both, reg, 20, 2), (std::vector<bool>{true, false}));
}

TEST(DeriveSeed, Spreads) {
  std::set<std::uint64_t> s;
  for (std::uint64_t i = 0; i < 1000; ++i) s.insert(derive_seed(42, i));
  EXPECT_EQ(s.size(), 1000u);
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

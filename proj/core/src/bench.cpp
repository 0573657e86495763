#include "beeflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beeflow/error.hpp"
#include "beeflow/formats.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/paths.hpp"

namespace beeflow::bench {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

std::vector<PlacementWorkflow> placement_inputs(const std::vector<SimWorkflow>& wfs,
                                                const std::vector<ExpectedTimeline>& tls) {
  std::vector<PlacementWorkflow> out;
  for (std::size_t i = 0; i < wfs.size(); ++i) out.push_back({&wfs[i].tree, &tls[i], &wfs[i].partition});
  return out;
}

PlacementPlan plan_with(std::span<const PlacementWorkflow> pws, const ClusterSpec& cluster, Policy policy,
                        std::uint64_t seed) {
  switch (policy) {
    case Policy::ContentionAware: return place(pws, cluster);
    case Policy::RoundRobin: return place_baseline(pws, cluster, Baseline::RoundRobin, seed);
    case Policy::Random: return place_baseline(pws, cluster, Baseline::Random, seed);
    case Policy::ColocateAll: return place_baseline(pws, cluster, Baseline::ColocateAll, seed);
  }
  return {};
}

double max_cost(const PlacementPlan& p) {
  double m = 0.0;
  for (const auto& [node, c] : p.per_node_cost) m = std::max(m, c);
  return m;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json ratio_json(double r) {
  if (std::isfinite(r)) return r;
  return "inf";
}

struct TreeGen {
  Rng& rng;
  const TreeGenOptions& opt;
  std::vector<FunctionSpec> fns;
  std::size_t next = 0;
  bool have_plain = false;

  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
  std::size_t pick(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }

  BtNode make_leaf() {
    const std::string id = "n" + std::to_string(next++);
    if (have_plain && unit() < opt.synthetic_prob) {
      FunctionSpec f;
      f.id = id;
      f.executor_kind = "noop";
      fns.push_back(f);
      return synthetic_leaf(id, id);
    }
    have_plain = true;
    FunctionSpec f;
    f.id = id;
    f.executor_kind = "mock.random";
    f.params = {{"p_success", 0.6 + 0.35 * unit()}};
    if (opt.loops) f.params["p_flag"] = 0.3;
    fns.push_back(f);
    return leaf(id, id);
  }

  std::string comp_id() { return "c" + std::to_string(next++); }

  BtNode gen(std::size_t budget) {
    if (budget <= 1 || unit() < 0.2) return make_leaf();
    const double k = unit();
    if (budget < 3 || k < 0.15) {
      const std::string id = comp_id();
      const double t = unit();
      TailSpec tail = TailSpec::once();
      if (t < 0.25) {
        tail = TailSpec::negate();
      } else if (t < 0.6) {
        tail = TailSpec::retry(static_cast<int>(pick(2, 3)));
      } else if (t < 0.8 && opt.loops) {
        tail = TailSpec::loop_till_end();
      }
      return decorator(gen(budget - 1), tail, id);
    }
    const std::string id = comp_id();
    const std::size_t n = pick(2, std::min<std::size_t>(4, budget - 1));
    // random composition of budget-1 into n positive parts
    std::vector<std::size_t> parts(n, 1);
    for (std::size_t extra = budget - 1 - n; extra > 0; --extra) ++parts[pick(0, n - 1)];
    std::vector<BtNode> kids;
    for (std::size_t p : parts) kids.push_back(gen(p));
    if (k < 0.5) return sequence(std::move(kids), id);
    if (k < 0.7) return fallback(std::move(kids), id);
    if (unit() < 0.3) return parallel(std::move(kids), AggSpec::m_out_of_n(static_cast<int>(pick(1, n))), id);
    return parallel(std::move(kids), AggSpec::all_succeed(), id);
  }
};

}  // namespace

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::ContentionAware: return "contention-aware";
    case Policy::RoundRobin: return "round-robin";
    case Policy::Random: return "random";
    case Policy::ColocateAll: return "colocate-all";
  }
  return "?";
}

Policy parse_policy(std::string_view text) {
  for (Policy p : all_policies()) {
    if (to_string(p) == text) return p;
  }
  throw Error(Errc::InvalidArgument, "unknown placement policy " + std::string(text));
}

const std::vector<Policy>& all_policies() {
  static const std::vector<Policy> all = {Policy::ContentionAware, Policy::RoundRobin, Policy::Random,
                                          Policy::ColocateAll};
  return all;
}

std::vector<ExpectedTimeline> timelines(const bundled::ScenarioTemplate& t) {
  std::vector<ExpectedTimeline> out;
  for (const SimWorkflow& w : t.workflows) out.push_back(align(w.tree, w.profiles));
  return out;
}

PlacementPlan plan_for(const bundled::ScenarioTemplate& t, Policy policy, std::uint64_t seed) {
  const auto tls = timelines(t);
  const auto pws = placement_inputs(t.workflows, tls);
  return plan_with(pws, t.cluster, policy, seed);
}

Scenario instantiate(const bundled::ScenarioTemplate& t, PlacementPlan plan) {
  Scenario s;
  s.workflows = t.workflows;
  s.plan = std::move(plan);
  s.cluster = t.cluster;
  s.mode = t.mode;
  s.requests_per_workflow = t.requests_per_workflow;
  s.rng_seed = t.rng_seed;
  s.jitter = t.jitter;
  return s;
}

std::vector<std::pair<std::string, std::int64_t>> node_tx_totals(const SimReport& report) {
  std::map<std::string, std::int64_t> sums;
  for (const std::string& n : report.nodes) sums[n] = 0;
  for (const Transfer& t : report.transfers) sums[t.node_id] += t.bytes;
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (const std::string& n : report.nodes) out.emplace_back(n, sums[n]);
  return out;
}

double tx_ratio(const SimReport& report) {
  const auto totals = node_tx_totals(report);
  if (totals.empty()) return 1.0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
  for (const auto& [n, b] : totals) {
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  if (hi == 0) return 1.0;
  if (lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(hi) / static_cast<double>(lo);
}

std::vector<ComparisonRow> run_comparison(const std::vector<bundled::ScenarioTemplate>& scenarios,
                                          const std::vector<Policy>& policies) {
  std::vector<ComparisonRow> rows;
  for (const bundled::ScenarioTemplate& t : scenarios) {
    const auto tls = timelines(t);
    const auto pws = placement_inputs(t.workflows, tls);
    for (Policy p : policies) {
      PlacementPlan plan = plan_with(pws, t.cluster, p, t.rng_seed);
      ComparisonRow row;
      row.scenario = t.name;
      row.policy = std::string(to_string(p));
      row.max_node_cost = max_cost(plan);
      row.total_cost = plan.total_cost;
      const SimReport rep = simulate(instantiate(t, std::move(plan)));
      std::vector<double> lat;
      for (const RequestLatency& r : rep.per_request) lat.push_back(r.latency_s);
      row.median_latency_s = median(std::move(lat));
      row.tx_ratio = tx_ratio(rep);
      for (const Transfer& tr : rep.transfers) row.total_tx_bytes += tr.bytes;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, std::ostream& out) {
  out << "scenario,policy,median_latency_s,max_node_cost,total_cost,tx_ratio,total_tx_bytes\n";
  for (const ComparisonRow& r : rows) {
    out << r.scenario << ',' << r.policy << ',' << format_double(r.median_latency_s) << ','
        << format_double(r.max_node_cost) << ',' << format_double(r.total_cost) << ','
        << (std::isfinite(r.tx_ratio) ? format_double(r.tx_ratio) : std::string("inf")) << ',' << r.total_tx_bytes
        << '\n';
  }
}

WorkflowDef random_tree(Rng& rng, const TreeGenOptions& opt, std::string workflow_id) {
  TreeGen g{rng, opt, {}, 0, false};
  const std::size_t hi = std::max<std::size_t>(1, opt.max_nodes);
  const std::size_t lo = std::clamp<std::size_t>(opt.min_nodes, 1, hi);
  const std::size_t budget = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  BtNode root = g.gen(budget);
  return WorkflowDef(std::move(workflow_id), root, std::move(g.fns));
}

DagDef random_dag(Rng& rng, std::size_t max_nodes, double edge_prob) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, max_nodes))(rng);
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i;
  std::shuffle(label.begin(), label.end(), rng);
  DagDef d;
  for (std::size_t i = 0; i < n; ++i) d.nodes.push_back("v" + std::to_string(i));
  std::bernoulli_distribution edge(edge_prob);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (edge(rng)) d.edges.emplace_back(d.nodes[label[i]], d.nodes[label[j]]);
    }
  }
  return d;
}

FsmDef random_fsm(Rng& rng, std::size_t max_states) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = pick(1, std::max<std::size_t>(1, max_states));
  FsmDef f;
  f.id = "rfsm";
  for (std::size_t i = 0; i < n; ++i) f.states.push_back("s" + std::to_string(i));
  f.initial = f.states[pick(0, n - 1)];
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& s = f.states[i];
    const std::string body = "body_" + s;
    f.body[s] = body;
    const std::size_t labels = pick(1, 3);
    nlohmann::json ls = nlohmann::json::array();
    for (std::size_t k = 0; k < labels; ++k) {
      const std::string label = "o" + std::to_string(k);
      ls.push_back(label);
      const std::string next = u(rng) < 0.3 ? std::string("END") : f.states[pick(0, n - 1)];
      f.transitions.push_back({s, label, next});
    }
    FunctionSpec fs;
    fs.id = body;
    fs.executor_kind = "mock.outcome";
    fs.params = {{"labels", ls}, {"p_fail", u(rng) < 0.5 ? 0.0 : 0.15}};
    f.functions.push_back(std::move(fs));
  }
  return f;
}

Profiles random_profiles(const WorkflowDef& tree, Rng& rng) {
  Profiles p = default_profiles(tree);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (NodeIndex l : tree.leaves()) {
    const TreeNode& n = tree.node(l);
    if (n.synthetic) continue;
    FunctionProfile& f = p.functions.at(n.id);
    f.init_delay_s = 0.05 + 0.45 * u(rng);
    f.exec_delay_s = 0.2 + 1.8 * u(rng);
    f.input_bytes = u(rng) < 0.1 ? 0.0 : std::round(u(rng) * 8.0 * kMiB);
    f.output_bytes = u(rng) < 0.1 ? 0.0 : std::round(u(rng) * 8.0 * kMiB);
    f.input_delay_s = f.input_bytes > 0 ? f.input_bytes / (100.0 * kMiB) : 0.05;
    f.output_delay_s = f.output_bytes > 0 ? f.output_bytes / (100.0 * kMiB) : 0.05;
    f.defaulted = false;
  }
  return p;
}

QualityResult placement_quality(std::size_t instances, std::uint64_t seed) {
  QualityResult q;
  q.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, i));
    // 6-24 subpaths drawn from whole random workflows
    const std::size_t target = std::uniform_int_distribution<std::size_t>(6, 24)(rng);
    std::vector<SimWorkflow> wfs;
    std::size_t subpaths = 0;
    for (std::size_t attempt = 0; subpaths < target && attempt < 200; ++attempt) {
      TreeGenOptions opt;
      opt.min_nodes = 8;
      opt.max_nodes = 25;
      opt.loops = false;
      WorkflowDef tree = random_tree(rng, opt, "w" + std::to_string(wfs.size()));
      Profiles prof = random_profiles(tree, rng);
      PartitionResult part = partition(tree, prof);
      if (subpaths + part.subpaths.size() > 24) continue;
      subpaths += part.subpaths.size();
      wfs.push_back({std::move(tree), std::move(prof), std::move(part)});
    }
    std::vector<ExpectedTimeline> tls;
    for (const SimWorkflow& w : wfs) tls.push_back(align(w.tree, w.profiles));
    const auto pws = placement_inputs(wfs, tls);

    ClusterSpec cluster;
    const std::size_t nn = std::uniform_int_distribution<std::size_t>(3, 9)(rng);
    for (std::size_t k = 0; k < nn; ++k) {
      NodeSpec n;
      n.node_id = "node" + std::to_string(k + 1);
      n.cpu_cores = 64.0;
      n.mem_bytes = std::int64_t{64} << 30;
      cluster.nodes.push_back(n);
    }

    const PlacementPlan ca = place(pws, cluster);
    const PlacementPlan rr = place_baseline(pws, cluster, Baseline::RoundRobin, seed);
    const PlacementPlan rnd = place_baseline(pws, cluster, Baseline::Random, derive_seed(seed, i));
    const PlacementPlan col = place_baseline(pws, cluster, Baseline::ColocateAll, seed);

    const double a = max_cost(ca), b = max_cost(rr);
    if (a <= b * (1.0 + 1e-12) + 1e-12) ++q.ca_not_worse;
    const double ratio = b > 0.0 ? a / b : (a > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    q.worst_ratio = std::max(q.worst_ratio, ratio);

    bool overlap = false;
    for (std::size_t w = 0; w < wfs.size() && !overlap; ++w) {
      const auto ids = leaf_ids(wfs[w].tree, wfs[w].tree.leaves());
      for (const IoInterval& iv : io_intervals(tls[w], ids)) {
        if (iv.degree >= 2 && iv.length() > 0.0) {
          overlap = true;
          break;
        }
      }
    }
    if (overlap) {
      ++q.overlap_instances;
      const double others = std::max(ca.total_cost, rr.total_cost);
      if (!(col.total_cost > others * (1.0 + 1e-12))) ++q.colocate_not_largest;
      if (!(col.total_cost > rnd.total_cost * (1.0 + 1e-12))) ++q.random_ties;
    }
  }
  return q;
}

std::vector<bundled::ScenarioTemplate> default_suite() {
  std::vector<bundled::ScenarioTemplate> out = bundled::all_scenarios();
  bundled::ScenarioTemplate one = bundled::t1_scenario();
  one.name = "t1-single-node";
  one.cluster = bundled::edge_cluster(1);
  out.push_back(std::move(one));
  return out;
}

nlohmann::json verdict(const std::vector<ComparisonRow>& rows, const QualityResult& quality) {
  using nlohmann::json;
  json checks = json::array();
  auto find = [&](std::string_view scenario, std::string_view policy) -> const ComparisonRow* {
    for (const ComparisonRow& r : rows) {
      if (r.scenario == scenario && r.policy == policy) return &r;
    }
    return nullptr;
  };

  const bool quality_ok = quality.ca_not_worse * 10 >= quality.instances * 9 && quality.worst_ratio <= 1.10;
  checks.push_back({{"name", "placement_quality"},
                    {"pass", quality_ok},
                    {"instances", quality.instances},
                    {"ca_not_worse", quality.ca_not_worse},
                    {"worst_ratio", ratio_json(quality.worst_ratio)}});
  checks.push_back({{"name", "colocate_all_largest_penalty"},
                    {"pass", quality.colocate_not_largest == 0},
                    {"overlap_instances", quality.overlap_instances},
                    {"violations", quality.colocate_not_largest},
                    {"random_ties", quality.random_ties}});

  const ComparisonRow* ca = find("io-heavy", "contention-aware");
  const ComparisonRow* col = find("io-heavy", "colocate-all");
  if (ca != nullptr && col != nullptr) {
    const bool ok = std::isfinite(ca->tx_ratio) && ca->tx_ratio <= 0.5 * col->tx_ratio;
    checks.push_back({{"name", "tx_balance"},
                      {"pass", ok},
                      {"contention_aware_ratio", ratio_json(ca->tx_ratio)},
                      {"colocate_all_ratio", ratio_json(col->tx_ratio)}});
  }

  std::map<std::string, std::vector<const ComparisonRow*>> by_scenario;
  for (const ComparisonRow& r : rows) by_scenario[r.scenario].push_back(&r);
  for (const auto& [name, rs] : by_scenario) {
    bool has_col = false;
    double col_cost = 0.0, other_max = 0.0;
    for (const ComparisonRow* r : rs) {
      if (r->policy == "colocate-all") {
        has_col = true;
        col_cost = r->total_cost;
      } else {
        other_max = std::max(other_max, r->total_cost);
      }
    }
    if (has_col && name == "io-heavy") {
      checks.push_back({{"name", "io_heavy_colocate_highest_penalty"},
                        {"pass", col_cost > other_max},
                        {"colocate_all_total", col_cost},
                        {"others_max_total", other_max}});
    }
  }
  if (auto it = by_scenario.find("t1-single-node"); it != by_scenario.end()) {
    bool same = true;
    for (const ComparisonRow* r : it->second) {
      const ComparisonRow* f = it->second.front();
      same = same && r->median_latency_s == f->median_latency_s && r->total_cost == f->total_cost &&
             r->total_tx_bytes == f->total_tx_bytes;
    }
    checks.push_back({{"name", "single_node_identical"}, {"pass", same}});
  }

  bool all = true;
  for (const json& c : checks) all = all && c.at("pass").get<bool>();
  return json{{"format", kFormatVersion}, {"pass", all}, {"checks", std::move(checks)}};
}

nlohmann::json run_suite(std::string_view suite, const std::filesystem::path& out_dir) {
  if (suite != "default") throw Error(Errc::InvalidArgument, "unknown suite " + std::string(suite));
  const auto rows = run_comparison(default_suite());
  const QualityResult q = placement_quality(100, 2024);
  const nlohmann::json v = verdict(rows, q);
  std::ostringstream csv;
  write_comparison_csv(rows, csv);
  write_text_file(out_dir / "comparison.csv", csv.str());
  write_json_file(out_dir / "verdict.json", v);
  return v;
}

}  // namespace beeflow::bench

#include <gtest/gtest.h>

#include <sstream>

#include "beeflow/bench.hpp"
#include "beeflow/bundled.hpp"
#include "beeflow/error.hpp"
#include "beeflow/sim.hpp"
#include "support.hpp"

using namespace beeflow;

namespace {

FunctionProfile quiet(double exec_s) {
  FunctionProfile p;
  p.init_delay_s = p.input_delay_s = p.output_delay_s = 0.0;
  p.input_bytes = p.output_bytes = 0.0;
  p.exec_delay_s = exec_s;
  p.defaulted = false;
  return p;
}

/// Every subpath of every workflow on `node`.
PlacementPlan all_on(const std::vector<SimWorkflow>& wfs, const std::string& node) {
  PlacementPlan plan;
  for (const auto& w : wfs) {
    for (const auto& s : w.partition.subpaths) plan.assignments[qualified_id(s)] = node;
  }
  return plan;
}

Scenario from_template(const bundled::ScenarioTemplate& t) {
  Scenario s;
  s.workflows = t.workflows;
  s.cluster = t.cluster;
  s.mode = t.mode;
  s.requests_per_workflow = t.requests_per_workflow;
  s.rng_seed = t.rng_seed;
  s.jitter = t.jitter;
  std::vector<ExpectedTimeline> tls;
  for (const auto& w : s.workflows) tls.push_back(align(w.tree, w.profiles));
  std::vector<PlacementWorkflow> pw;
  for (std::size_t i = 0; i < s.workflows.size(); ++i) {
    pw.push_back({&s.workflows[i].tree, &tls[i], &s.workflows[i].partition});
  }
  s.plan = place(pw, s.cluster);
  return s;
}

SimWorkflow single_leaf(double exec_s) {
  SimWorkflow w{WorkflowDef("one", leaf("a")), {}, {}};
  w.tree.add_missing_functions();
  w.profiles.functions["a"] = quiet(exec_s);
  w.partition = partition(w.tree, w.profiles);
  return w;
}

/// Leaves under one Parallel, each writing `out_bytes[k]` and nothing else.
SimWorkflow fan_out(const std::vector<double>& out_bytes) {
  std::vector<BtNode> kids;
  for (std::size_t k = 0; k < out_bytes.size(); ++k) kids.push_back(leaf("l" + std::to_string(k)));
  SimWorkflow w{WorkflowDef("fan", parallel(std::move(kids))), {}, {}};
  w.tree.add_missing_functions();
  for (std::size_t k = 0; k < out_bytes.size(); ++k) {
    FunctionProfile p = quiet(0.0);
    p.output_bytes = out_bytes[k];
    w.profiles.functions["l" + std::to_string(k)] = p;
  }
  // one subpath per leaf so nothing depends on the partitioner here
  for (std::size_t k = 0; k < out_bytes.size(); ++k) {
    w.partition.subpaths.push_back({"sp" + std::to_string(k + 1), "fan", {"l" + std::to_string(k)}});
  }
  w.partition.workflow_id = "fan";
  return w;
}

double moved(const SimReport& r) {
  double total = 0.0;
  for (const auto& t : r.transfers) total += static_cast<double>(t.bytes);
  return total;
}

}  // namespace

TEST(Simulate, SingleLeafLatency) {
  Scenario s;
  s.workflows = {single_leaf(1.0)};
  s.cluster.nodes = {NodeSpec{"n1"}};
  s.plan = all_on(s.workflows, "n1");
  s.requests_per_workflow = 3;
  const SimReport r = simulate(s);
  ASSERT_EQ(r.per_request.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(r.per_request[i].latency_s, 1.0);
    EXPECT_DOUBLE_EQ(r.per_request[i].start_s, static_cast<double>(i));
  }
  EXPECT_DOUBLE_EQ(r.span_s, 3.0);
}

TEST(Simulate, FairShareClosedForm) {
  Scenario s;
  s.workflows = {fan_out({10e6, 10e6})};
  s.cluster.nodes = {NodeSpec{"n1", 4, std::int64_t{4} << 30, 10e6}};
  s.plan = all_on(s.workflows, "n1");
  const SimReport r = simulate(s);
  ASSERT_EQ(r.transfers.size(), 2u);
  for (const auto& t : r.transfers) EXPECT_NEAR(t.end, 2.0, 1e-9);
}

TEST(Simulate, ProcessorSharingMatchesClosedForm) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(1e5, 5e7);
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<double> bytes;
    for (std::size_t k = 0; k < n; ++k) bytes.push_back(std::round(u(rng)));
    const double bw = 1e7;
    Scenario s;
    s.workflows = {fan_out(bytes)};
    s.cluster.nodes = {NodeSpec{"n1", 8, std::int64_t{4} << 30, bw}};
    s.plan = all_on(s.workflows, "n1");
    const SimReport r = simulate(s);
    // sorted sizes b(1) <= ... <= b(n): the k-th finishes after the previous one
    // plus its remaining bytes shared among n-k+1 transfers
    std::vector<double> sorted = bytes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> want;
    double t = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      t += (sorted[k] - prev) * static_cast<double>(n - k) / bw;
      prev = sorted[k];
      want.push_back(t);
    }
    std::vector<double> got;
    for (const auto& tr : r.transfers) got.push_back(tr.end);
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got.size(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(got[k], want[k], 1e-6 * std::max(1.0, want[k])) << i;
  }
}

TEST(Simulate, ConservationAndCapsT1) {
  Scenario s = from_template(bundled::t1_scenario());
  s.requests_per_workflow = 4;
  const SimReport r = simulate(s);
  double sampled = 0.0;
  std::map<std::string, double> per_node;
  for (const auto& inv : r.invocations) {
    sampled += static_cast<double>(inv.input_bytes + inv.output_bytes);
    per_node[inv.node_id] += static_cast<double>(inv.input_bytes + inv.output_bytes);
  }
  EXPECT_DOUBLE_EQ(moved(r), sampled);
  // the tx series integrates back to the same bytes, node by node
  for (const auto& series : node_tx_series(r)) {
    double sum = 0.0;
    for (double v : series.bytes_per_s) sum += v * series.window_s;
    EXPECT_NEAR(sum, per_node[series.node_id], 1e-6 * std::max(1.0, sum)) << series.node_id;
    EXPECT_GE(static_cast<double>(series.bytes_per_s.size()) * series.window_s, r.span_s);
  }
}

TEST(Simulate, CapsHoldUnderCoRun) {
  Scenario s = from_template(bundled::io_heavy_scenario());
  s.mode = SimMode::CoRun;
  s.requests_per_workflow = 3;
  s.jitter = 0.2;
  const SimReport r = simulate(s);
  std::map<std::string, NodeSpec> spec;
  for (const auto& n : s.cluster.nodes) spec[n.node_id] = n;
  ASSERT_FALSE(r.io_log.empty());
  for (const auto& seg : r.io_log) EXPECT_LE(seg.rate_Bps, spec.at(seg.node_id).io_bw_Bps * (1 + 1e-12));
  for (const auto& seg : r.cpu_log) EXPECT_LE(seg.cores, spec.at(seg.node_id).cpu_cores + 1e-12);
  // transfers on any node at one instant never exceed the bandwidth in aggregate
  std::map<std::string, std::vector<const Transfer*>> by_node;
  for (const auto& t : r.transfers) by_node[t.node_id].push_back(&t);
  EXPECT_DOUBLE_EQ(moved(r), [&] {
    double b = 0;
    for (const auto& inv : r.invocations) b += static_cast<double>(inv.input_bytes + inv.output_bytes);
    return b;
  }());
  std::map<std::string, std::size_t> per_wf;
  for (const auto& p : r.per_request) {
    ++per_wf[p.workflow_id];
    EXPECT_GT(p.latency_s, 0.0);
    EXPECT_NEAR(p.latency_s, p.end_s - p.start_s, 1e-12);
  }
  for (const auto& [w, n] : per_wf) EXPECT_EQ(n, 3u) << w;
  EXPECT_EQ(per_wf.size(), s.workflows.size());
  // co-run: every client starts at zero
  for (const auto& w : s.workflows) {
    auto it = std::find_if(r.per_request.begin(), r.per_request.end(),
                           [&](const RequestLatency& x) { return x.workflow_id == w.tree.id(); });
    ASSERT_NE(it, r.per_request.end());
    EXPECT_DOUBLE_EQ(it->start_s, 0.0);
  }
}

TEST(Simulate, SingleModeRunsWorkflowsOneAfterAnother) {
  Scenario s = from_template(bundled::io_heavy_scenario());
  s.mode = SimMode::Single;
  s.requests_per_workflow = 2;
  const SimReport r = simulate(s);
  std::map<std::string, std::pair<double, double>> span;
  for (const auto& p : r.per_request) {
    auto [it, fresh] = span.try_emplace(p.workflow_id, p.start_s, p.end_s);
    if (!fresh) {
      it->second.first = std::min(it->second.first, p.start_s);
      it->second.second = std::max(it->second.second, p.end_s);
    }
  }
  std::vector<std::pair<double, double>> spans;
  for (const auto& [w, sp] : span) spans.push_back(sp);
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 0; i + 1 < spans.size(); ++i) EXPECT_LE(spans[i].second, spans[i + 1].first + 1e-12);
}

TEST(Simulate, GanttPeriodsOrdered) {
  Scenario s = from_template(bundled::llm_scenario());
  s.requests_per_workflow = 3;
  const SimReport r = simulate(s);
  ASSERT_FALSE(r.gantt.empty());
  for (const auto& g : r.gantt) {
    EXPECT_LE(g.init.start, g.init.end);
    EXPECT_LE(g.init.end, g.input.start);
    EXPECT_LE(g.input.start, g.input.end);
    EXPECT_LE(g.input.end, g.exec.start);
    EXPECT_LE(g.exec.start, g.exec.end);
    EXPECT_LE(g.exec.end, g.output.start);
    EXPECT_LE(g.output.start, g.output.end);
  }
}

TEST(Simulate, WarmStartIsNotSlower) {
  SimWorkflow w = single_leaf(1.0);
  w.profiles.functions["a"].init_delay_s = 2.0;
  Scenario s;
  s.workflows = {w};
  s.cluster.nodes = {NodeSpec{"n1"}};
  s.plan = all_on(s.workflows, "n1");
  s.requests_per_workflow = 2;
  const SimReport r = simulate(s);
  EXPECT_DOUBLE_EQ(r.per_request[0].latency_s, 3.0);
  EXPECT_DOUBLE_EQ(r.per_request[1].latency_s, 1.0);

  Scenario t = from_template(bundled::t1_scenario());
  t.requests_per_workflow = 2;
  const SimReport q = simulate(t);
  EXPECT_LE(q.per_request[1].latency_s, q.per_request[0].latency_s);
}

TEST(Simulate, CoresQueueFifo) {
  // three 1-core leaves in parallel on a 2-core node: the third waits a full second
  std::vector<BtNode> kids{leaf("a"), leaf("b"), leaf("c")};
  SimWorkflow w{WorkflowDef("q", parallel(std::move(kids))), {}, {}};
  w.tree.add_missing_functions();
  for (const char* id : {"a", "b", "c"}) w.profiles.functions[id] = quiet(1.0);
  w.partition = partition(w.tree, w.profiles);
  Scenario s;
  s.workflows = {w};
  s.cluster.nodes = {NodeSpec{"n1", 2, std::int64_t{4} << 30, 1e8}};
  s.plan = all_on(s.workflows, "n1");
  const SimReport r = simulate(s);
  EXPECT_DOUBLE_EQ(r.per_request[0].latency_s, 2.0);
  std::vector<double> starts;
  for (const auto& g : r.gantt) starts.push_back(g.exec.start);
  std::sort(starts.begin(), starts.end());
  EXPECT_EQ(starts, (std::vector<double>{0.0, 0.0, 1.0}));
  for (const auto& seg : r.cpu_log) EXPECT_LE(seg.cores, 2.0);
}

TEST(Simulate, DeterministicForSeed) {
  Scenario s = from_template(bundled::shapes_scenario());
  s.requests_per_workflow = 2;
  s.jitter = 0.3;
  s.rng_seed = 77;
  const SimReport a = simulate(s), b = simulate(s);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  s.rng_seed = 78;
  EXPECT_NE(to_json(simulate(s)).dump(), to_json(a).dump());
}

TEST(Simulate, SamePrefixLeavesBecomeReadyTogether) {
  const WorkflowDef t = bundled::t1();
  Scenario s;
  s.workflows = {SimWorkflow{t, default_profiles(t), partition(t, default_profiles(t))}};
  s.cluster.nodes = {NodeSpec{"n1", 64}, NodeSpec{"n2", 64}};
  s.plan = all_on(s.workflows, "n1");
  s.plan.assignments["t1/sp2"] = "n2";
  const SimReport r = simulate(s);
  std::map<std::string, double> first;
  for (const auto& inv : r.invocations) first.try_emplace(inv.leaf_id, inv.ready_s);
  for (NodeIndex a : t.leaves()) {
    for (NodeIndex b : t.leaves()) {
      if (a < b && same_prefix(t, t.node(a).id, t.node(b).id) && first.count(t.node(a).id) && first.count(t.node(b).id)) {
        EXPECT_NEAR(first[t.node(a).id], first[t.node(b).id], 1e-12) << t.node(a).id << " " << t.node(b).id;
      }
    }
  }
  EXPECT_NEAR(first.at("f2"), first.at("f5"), 1e-12);
}

TEST(Simulate, ScenarioErrors) {
  Scenario s;
  s.workflows = {single_leaf(1.0)};
  s.cluster.nodes = {NodeSpec{"n1"}};
  EXPECT_FALSE(check_scenario(s).empty());
  try {
    simulate(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::UnplacedLeaf || e.code() == Errc::InvalidScenario);
  }
  s.plan = all_on(s.workflows, "ghost");
  EXPECT_THROW(simulate(s), Error);
  s.plan = all_on(s.workflows, "n1");
  s.requests_per_workflow = 0;
  EXPECT_THROW(simulate(s), Error);
  EXPECT_EQ(parse_mode("co-run"), SimMode::CoRun);
  EXPECT_EQ(to_string(SimMode::Single), "single");
  EXPECT_THROW(parse_mode("both"), Error);
}

TEST(Gantt, CsvRoundTrip) {
  Scenario s = from_template(bundled::t1_scenario());
  s.requests_per_workflow = 2;
  s.jitter = 0.25;
  const SimReport r = simulate(s);
  std::ostringstream out;
  write_gantt_csv(r, out);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_gantt_csv(in), r.gantt);
  std::size_t rows = 0;
  for (char c : out.str()) rows += c == '\n';
  EXPECT_EQ(rows, 1 + 4 * r.gantt.size());

  testing_support::TempDir dir("gantt");
  export_gantt(r, dir / "g.csv");
  EXPECT_EQ(testing_support::slurp(dir / "g.csv"), out.str());
  EXPECT_THROW(export_gantt(r, dir / "missing" / "g.csv"), Error);

  std::ostringstream empty;
  write_gantt_csv(SimReport{}, empty);
  EXPECT_EQ(empty.str(), "workflow_id,request_id,leaf_id,node_id,period,start_s,end_s\n");
  std::istringstream bad("workflow_id,request_id,leaf_id,node_id,period,start_s,end_s\nw,x,a,n,init,0,1\n");
  EXPECT_THROW(parse_gantt_csv(bad), Error);
}

TEST(NodeTx, Windows) {
  SimReport r;
  r.nodes = {"n1"};
  r.span_s = 5.0;
  // one 10 MB output over [1, 3) at 5 MB/s
  r.io_log = {{"n1", 1.0, 3.0, 1, 5e6}};
  auto series = node_tx_series(r);
  ASSERT_EQ(series.size(), 1u);
  ASSERT_EQ(series[0].bytes_per_s.size(), 1u);
  EXPECT_DOUBLE_EQ(series[0].bytes_per_s[0], 2e6);
  r.io_log.clear();
  const auto idle = node_tx_series(r);
  for (double v : idle[0].bytes_per_s) EXPECT_EQ(v, 0.0);
  r.span_s = 12.0;
  r.io_log = {{"n1", 4.0, 6.0, 2, 1e6}};
  const auto split = node_tx_series(r);
  EXPECT_EQ(split[0].bytes_per_s, (std::vector<double>{2e5, 2e5, 0.0}));
  EXPECT_THROW(node_tx_series(r, 0.0), Error);
  std::ostringstream out;
  write_node_tx_csv(series, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "node_id,window_start_s,bytes_per_s");
}

TEST(Reports, TracesAndSummary) {
  Scenario s = from_template(bundled::t1_scenario());
  s.requests_per_workflow = 5;
  const SimReport r = simulate(s);
  const auto traces = report_traces(r);
  EXPECT_EQ(traces.size(), r.invocations.size());
  const auto sum = latency_summary(r);
  ASSERT_EQ(sum.size(), 1u);
  EXPECT_EQ(sum[0].requests, 5u);
  EXPECT_LE(sum[0].min_s, sum[0].median_s);
  EXPECT_LE(sum[0].median_s, sum[0].p95_s);
  EXPECT_LE(sum[0].p95_s, sum[0].max_s);
  // re-estimating from simulated traces recovers default byte counts exactly
  const WorkflowDef& t = s.workflows[0].tree;
  TraceStore store;
  for (const auto& tr : traces) store.add(tr);
  const Profiles back = estimate(store, t);
  EXPECT_DOUBLE_EQ(back.functions.at("f1").input_bytes, s.workflows[0].profiles.functions.at("f1").input_bytes);
}

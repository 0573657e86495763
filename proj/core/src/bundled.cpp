#include "beeflow/bundled.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "beeflow/error.hpp"
#include "beeflow/formats.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/paths.hpp"

namespace beeflow::bundled {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

FunctionSpec fn(std::string id, std::string kind, nlohmann::json params = nlohmann::json::object(),
                std::int64_t mem = std::int64_t{128} << 20, double cpu = 1.0) {
  FunctionSpec f;
  f.id = std::move(id);
  f.executor_kind = std::move(kind);
  f.params = std::move(params);
  f.mem_request_bytes = mem;
  f.cpu_request_cores = cpu;
  return f;
}

std::uint64_t name_seed(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

void chain(DagDef& d, std::initializer_list<std::string_view> nodes) {
  std::string_view prev;
  for (std::string_view n : nodes) {
    if (!prev.empty()) d.edges.emplace_back(std::string(prev), std::string(n));
    prev = n;
  }
}

void fan(DagDef& d, const std::vector<std::string>& from, const std::vector<std::string>& to) {
  for (const auto& a : from)
    for (const auto& b : to) d.edges.emplace_back(a, b);
}

std::vector<std::string> numbered(std::string_view stem, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(std::string(stem) + std::to_string(i));
  return out;
}

void add_nodes(DagDef& d, const std::vector<std::string>& ns) { d.nodes.insert(d.nodes.end(), ns.begin(), ns.end()); }

SimWorkflow prepared(WorkflowDef tree, Profiles profiles) {
  PartitionResult part = partition(tree, profiles);
  return {std::move(tree), std::move(profiles), std::move(part)};
}

WorkflowDef with_resources(const WorkflowDef& tree, std::int64_t mem, double cpu) {
  std::vector<FunctionSpec> fns(tree.function_list().begin(), tree.function_list().end());
  for (FunctionSpec& f : fns) {
    f.mem_request_bytes = mem;
    f.cpu_request_cores = cpu;
  }
  WorkflowDef out(tree.id(), tree.to_bt(), std::move(fns));
  out.set_converted_from(tree.converted_from());
  return out;
}

}  // namespace

WorkflowDef t1() {
  BtNode root = sequence(
      {
          leaf("f1"),
          parallel({sequence({leaf("f2"), leaf("f8")}, "left"), sequence({leaf("f5"), leaf("f6"), leaf("f7")}, "right")},
                   AggSpec::all_succeed(), "par"),
          fallback({leaf("f3"), leaf("f4")}, "sel"),
      },
      "root");
  WorkflowDef wf("t1", root);
  wf.add_missing_functions();
  return wf;
}

DagDef diamond_dag() {
  DagDef d;
  d.nodes = {"a", "b", "c", "d"};
  d.edges = {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}};
  return d;
}

FsmDef three_state_fsm() {
  FsmDef f;
  f.id = "fsm3";
  f.states = {"idle", "work", "store"};
  f.initial = "idle";
  f.body = {{"idle", "poll"}, {"work", "crunch"}, {"store", "persist"}};
  f.transitions = {
      {"idle", "ok", "work"},
      {"work", "ok", "store"},
      {"work", "retry", "work"},
      {"store", "ok", "END"},
  };
  f.functions = {
      fn("poll", "mock.outcome", {{"labels", {"ok"}}}),
      fn("crunch", "mock.outcome", {{"labels", {"ok", "retry"}}}),
      fn("persist", "mock.outcome", {{"labels", {"ok"}}}),
  };
  return f;
}

WorkflowDef llm_codegen() {
  auto subtree = [](const std::string& p) {
    return sequence({leaf(p + ".f0", "f0"),
                     decorator(sequence({leaf(p + ".f1", "f1"), leaf(p + ".f2", "f2"), leaf(p + ".f3", "f3")}, p + ".gen"),
                               TailSpec::retry(3), p + ".retry")},
                    p);
  };
  BtNode root = decorator(sequence({parallel({subtree("A"), subtree("B")}, AggSpec::named("flat"), "generate"),
                                    leaf("f4"), fallback({leaf("f5"), leaf("f6")}, "run")},
                                   "pipeline"),
                          TailSpec::retry(3), "attempt");
  std::vector<FunctionSpec> fns = {
      fn("f0", "mock"),
      fn("f1", "mock", {}, std::int64_t{512} << 20, 2.0),
      fn("f2", "mock.random", {{"p_success", 0.8}}),
      fn("f3", "mock.random", {{"p_success", 0.9}}),
      fn("f4", "mock"),
      fn("f5", "mock.random", {{"p_success", 0.7}}, std::int64_t{256} << 20),
      fn("f6", "mock.fail"),
  };
  return WorkflowDef("llm-codegen", root, std::move(fns));
}

Profiles llm_codegen_profiles(const WorkflowDef& tree) {
  Profiles p = default_profiles(tree);
  auto set = [&](const std::string& leaf_id, double exec_s, double in_b, double out_b, double fail) {
    FunctionProfile& f = p.functions.at(leaf_id);
    f.exec_delay_s = exec_s;
    f.input_bytes = in_b;
    f.output_bytes = out_b;
    f.input_delay_s = in_b / (100.0 * kMiB);
    f.output_delay_s = out_b / (100.0 * kMiB);
    f.fail_prob = fail;
    f.defaulted = false;
  };
  for (const std::string s : {"A", "B"}) {
    set(s + ".f0", 0.1, 4096, 4096, 0.0);
    set(s + ".f1", 3.0, 64 * 1024, 32 * 1024, 0.0);
    set(s + ".f2", 0.4, 32 * 1024, 4096, 0.2);
    set(s + ".f3", 1.2, 32 * 1024, 2 * kMiB, 0.1);
  }
  set("f4", 0.8, 4 * kMiB, 4096, 0.0);
  set("f5", 2.5, 64 * 1024, 8 * kMiB, 0.3);
  set("f6", 5.0, 8 * kMiB, 4096, 1.0);
  return p;
}

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names = {"cyc", "epi", "gen", "soy", "vid", "ir", "fp", "wc"};
  return names;
}

DagDef shape_dag(std::string_view name) {
  DagDef d;
  if (name == "cyc") {
    const auto base = numbered("baseline", 4);
    const auto parse = numbered("parse", 2);
    d.nodes = {"fetch"};
    add_nodes(d, base);
    d.nodes.push_back("merge");
    add_nodes(d, parse);
    d.nodes.push_back("summary");
    fan(d, {"fetch"}, base);
    fan(d, base, {"merge"});
    fan(d, {"merge"}, parse);
    fan(d, parse, {"summary"});
  } else if (name == "epi") {
    d.nodes = {"split"};
    for (int i = 1; i <= 3; ++i) {
      const std::string s = std::to_string(i);
      const std::vector<std::string> lane = {"filter" + s, "sanger" + s, "bfq" + s, "map" + s};
      add_nodes(d, lane);
      d.edges.emplace_back("split", lane[0]);
      for (std::size_t k = 1; k < lane.size(); ++k) d.edges.emplace_back(lane[k - 1], lane[k]);
      d.edges.emplace_back(lane.back(), "merge");
    }
    add_nodes(d, {"merge", "index", "pileup"});
    chain(d, {"merge", "index", "pileup"});
  } else if (name == "gen") {
    const auto ind = numbered("individuals", 3);
    const std::vector<std::string> tails = {"mutation1", "mutation2", "frequency1", "frequency2"};
    add_nodes(d, ind);
    add_nodes(d, {"ind_merge", "sifting"});
    add_nodes(d, tails);
    fan(d, ind, {"ind_merge"});
    fan(d, {"ind_merge", "sifting"}, tails);
  } else if (name == "soy") {
    std::vector<std::string> hc;
    for (int i = 1; i <= 3; ++i) {
      const std::string s = std::to_string(i);
      const std::vector<std::string> lane = {"align" + s, "sort" + s, "dedup" + s, "haplotype" + s};
      add_nodes(d, lane);
      for (std::size_t k = 1; k < lane.size(); ++k) d.edges.emplace_back(lane[k - 1], lane[k]);
      hc.push_back(lane.back());
    }
    add_nodes(d, {"genotype", "snp", "indel", "combine"});
    fan(d, hc, {"genotype"});
    fan(d, {"genotype"}, {"snp", "indel"});
    fan(d, {"snp", "indel"}, {"combine"});
  } else if (name == "vid") {
    const auto tr = numbered("transcode", 3);
    d.nodes = {"split"};
    add_nodes(d, tr);
    add_nodes(d, {"audio", "merge"});
    fan(d, {"split"}, tr);
    fan(d, tr, {"merge"});
    chain(d, {"split", "audio", "merge"});
  } else if (name == "ir") {
    d.nodes = {"upload", "extract", "ocr", "detect", "classify", "mosaic", "store"};
    chain(d, {"upload", "extract", "ocr", "classify", "mosaic", "store"});
    chain(d, {"extract", "detect", "classify"});
  } else if (name == "fp") {
    d.nodes = {"start", "md2html", "count", "compress", "end"};
    fan(d, {"start"}, {"md2html", "count", "compress"});
    fan(d, {"md2html", "count", "compress"}, {"end"});
  } else if (name == "wc") {
    const auto m = numbered("map", 4);
    const auto r = numbered("reduce", 2);
    d.nodes = {"split"};
    add_nodes(d, m);
    add_nodes(d, r);
    d.nodes.push_back("collect");
    fan(d, {"split"}, m);
    fan(d, m, r);
    fan(d, r, {"collect"});
  } else {
    throw Error(Errc::InvalidArgument, "unknown shape " + std::string(name));
  }
  return d;
}

WorkflowDef shape(std::string_view name) { return dag_to_bt(shape_dag(name), std::string(name)); }

Profiles synthetic_profiles(const WorkflowDef& tree, std::uint64_t seed, double io_scale) {
  Profiles p = default_profiles(tree);
  Rng rng(derive_seed(seed, name_seed(tree.id())));
  std::uniform_real_distribution<double> init(0.1, 0.6), exec(0.5, 2.5), bytes(0.25, 4.0);
  for (NodeIndex l : tree.leaves()) {
    const TreeNode& n = tree.node(l);
    if (n.synthetic) continue;
    FunctionProfile& f = p.functions.at(n.id);
    f.init_delay_s = init(rng);
    f.exec_delay_s = exec(rng);
    f.input_bytes = std::round(bytes(rng) * io_scale * kMiB);
    f.output_bytes = std::round(bytes(rng) * io_scale * kMiB);
    f.input_delay_s = f.input_bytes / (100.0 * kMiB);
    f.output_delay_s = f.output_bytes / (100.0 * kMiB);
    f.defaulted = false;
  }
  return p;
}

std::vector<TraceRecord> uniform_traces(const WorkflowDef& tree, std::size_t requests, const FunctionProfile& profile) {
  ExecOptions opt;
  opt.duration = [&](const LeafCall& call, Rng&) {
    return call.workflow.node(call.leaf).synthetic ? 0.0 : profile.total_delay_s();
  };
  const ExecutorRegistry executors = ExecutorRegistry::with_builtins();
  std::vector<TraceRecord> out;
  double offset = 0.0;
  for (std::size_t r = 0; r < requests; ++r) {
    const ExecResult res = execute(tree, {}, executors, derive_seed(0x7ace, r), opt);
    for (const LogEntry& e : res.log.entries) {
      const TreeNode& n = tree.node(e.leaf);
      if (n.synthetic) continue;
      TraceRecord rec;
      rec.workflow_id = tree.id();
      rec.request_id = "r" + std::to_string(r + 1);
      rec.leaf_id = n.id;
      rec.decorator_iteration = e.iteration;
      const double t = offset + e.start;
      if (e.skipped) {
        rec.status = TraceStatus::Skipped;
        rec.t_init_start = rec.t_input_start = rec.t_exec_start = rec.t_output_start = rec.t_end = t;
      } else {
        rec.status = e.status == ExecStatus::Success ? TraceStatus::Success : TraceStatus::Failure;
        rec.t_init_start = t;
        rec.t_input_start = t + profile.init_delay_s;
        rec.t_exec_start = rec.t_input_start + profile.input_delay_s;
        rec.t_output_start = rec.t_exec_start + profile.exec_delay_s;
        rec.t_end = rec.t_output_start + profile.output_delay_s;
        rec.input_bytes = std::llround(profile.input_bytes);
        rec.output_bytes = std::llround(profile.output_bytes);
      }
      out.push_back(std::move(rec));
    }
    offset += res.log.makespan() + 1.0;
  }
  return out;
}

ClusterSpec edge_cluster(std::size_t nodes) {
  ClusterSpec c;
  for (std::size_t i = 1; i <= nodes; ++i) {
    NodeSpec n;
    n.node_id = "sbc" + std::to_string(i);
    n.cpu_cores = 6.0;
    n.mem_bytes = std::int64_t{4} << 30;
    n.io_bw_Bps = 50.0 * kMiB;
    c.nodes.push_back(n);
  }
  return c;
}

ScenarioTemplate t1_scenario() {
  ScenarioTemplate s;
  s.name = "t1";
  WorkflowDef tree = t1();
  Profiles prof = default_profiles(tree);
  s.workflows.push_back(prepared(std::move(tree), std::move(prof)));
  s.cluster = edge_cluster(3);
  s.requests_per_workflow = 5;
  s.rng_seed = 1;
  return s;
}

ScenarioTemplate io_heavy_scenario() {
  ScenarioTemplate s;
  s.name = "io-heavy";
  for (const char* name : {"vid", "wc", "fp", "gen"}) {
    WorkflowDef tree = with_resources(shape(name), std::int64_t{256} << 20, 1.0);
    Profiles prof = synthetic_profiles(tree, 42, 8.0);
    s.workflows.push_back(prepared(std::move(tree), std::move(prof)));
  }
  s.cluster = edge_cluster(4);
  s.mode = SimMode::CoRun;
  s.requests_per_workflow = 4;
  s.rng_seed = 7;
  s.jitter = 0.1;
  return s;
}

ScenarioTemplate shapes_scenario() {
  ScenarioTemplate s;
  s.name = "shapes";
  for (const std::string& name : shape_names()) {
    WorkflowDef tree = shape(name);
    Profiles prof = synthetic_profiles(tree, 42);
    s.workflows.push_back(prepared(std::move(tree), std::move(prof)));
  }
  s.cluster = edge_cluster(4);
  s.mode = SimMode::CoRun;
  s.requests_per_workflow = 3;
  s.rng_seed = 11;
  s.jitter = 0.2;
  return s;
}

ScenarioTemplate llm_scenario() {
  ScenarioTemplate s;
  s.name = "llm";
  WorkflowDef tree = llm_codegen();
  Profiles prof = llm_codegen_profiles(tree);
  s.workflows.push_back(prepared(std::move(tree), std::move(prof)));
  WorkflowDef fsm = fsm_to_bt(three_state_fsm(), "fsm3");
  Profiles fprof = synthetic_profiles(fsm, 5);
  s.workflows.push_back(prepared(std::move(fsm), std::move(fprof)));
  s.cluster = edge_cluster(2);
  s.mode = SimMode::CoRun;
  s.requests_per_workflow = 5;
  s.rng_seed = 3;
  s.jitter = 0.1;
  return s;
}

std::vector<ScenarioTemplate> all_scenarios() {
  return {t1_scenario(), io_heavy_scenario(), shapes_scenario(), llm_scenario()};
}

std::vector<SimWorkflow> all_workflows() {
  std::vector<SimWorkflow> out;
  {
    WorkflowDef t = t1();
    Profiles p = default_profiles(t);
    out.push_back(prepared(std::move(t), std::move(p)));
  }
  {
    WorkflowDef d = dag_to_bt(diamond_dag(), "diamond");
    Profiles p = default_profiles(d);
    out.push_back(prepared(std::move(d), std::move(p)));
  }
  {
    WorkflowDef f = fsm_to_bt(three_state_fsm(), "fsm3");
    Profiles p = synthetic_profiles(f, 5);
    out.push_back(prepared(std::move(f), std::move(p)));
  }
  {
    WorkflowDef l = llm_codegen();
    Profiles p = llm_codegen_profiles(l);
    out.push_back(prepared(std::move(l), std::move(p)));
  }
  for (const std::string& name : shape_names()) {
    WorkflowDef s = shape(name);
    Profiles p = synthetic_profiles(s, 42);
    out.push_back(prepared(std::move(s), std::move(p)));
  }
  return out;
}

std::vector<std::filesystem::path> write_examples(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  auto put = [&](const fs::path& rel, const nlohmann::json& j) {
    write_json_file(dir / rel, j);
    written.push_back(dir / rel);
  };

  put("workflows/t1.json", to_json(t1()));
  put("sources/diamond.dag.json", to_json(diamond_dag()));
  put("sources/fsm3.fsm.json", to_json(three_state_fsm()));
  put("workflows/diamond.json", to_json(dag_to_bt(diamond_dag(), "diamond")));
  put("workflows/fsm3.json", to_json(fsm_to_bt(three_state_fsm(), "fsm3")));
  const WorkflowDef llm = llm_codegen();
  put("workflows/llm-codegen.json", to_json(llm));
  put("profiles/llm-codegen.json", to_json(llm_codegen_profiles(llm)));
  for (const std::string& name : shape_names()) {
    put("sources/" + name + ".dag.json", to_json(shape_dag(name)));
    const WorkflowDef wf = shape(name);
    put("workflows/" + name + ".json", to_json(wf));
    put("profiles/" + name + ".json", to_json(synthetic_profiles(wf, 42)));
  }

  {
    const fs::path rel = "traces/t1.jsonl";
    fs::create_directories((dir / rel).parent_path());
    std::ofstream out(dir / rel, std::ios::binary | std::ios::trunc);
    const auto recs = uniform_traces(t1(), 20);
    write_traces(out, recs);
    if (!out) throw Error(Errc::IoError, "cannot write " + (dir / rel).string());
    written.push_back(dir / rel);
  }

  for (const ScenarioTemplate& t : all_scenarios()) {
    const fs::path base = fs::path("scenarios") / t.name;
    ScenarioFile sf;
    std::vector<PlacementWorkflow> pws;
    std::vector<ExpectedTimeline> timelines;
    timelines.reserve(t.workflows.size());
    for (const SimWorkflow& w : t.workflows) {
      PartitionFile pf{w.tree, w.profiles, w.partition, PartitionPolicy::io_contention()};
      const std::string file = "partition-" + w.tree.id() + ".json";
      put(base / file, to_json(pf));
      sf.partitions.push_back(file);
      timelines.push_back(align(w.tree, w.profiles));
    }
    for (std::size_t i = 0; i < t.workflows.size(); ++i) {
      pws.push_back({&t.workflows[i].tree, &timelines[i], &t.workflows[i].partition});
    }
    put(base / "cluster.json", to_json(t.cluster));
    put(base / "plan.json", to_json(place(pws, t.cluster)));
    sf.plan = "plan.json";
    sf.cluster = "cluster.json";
    sf.mode = t.mode;
    sf.requests_per_workflow = t.requests_per_workflow;
    sf.rng_seed = t.rng_seed;
    sf.jitter = t.jitter;
    put(base / "scenario.json", to_json(sf));
  }
  return written;
}

}  // namespace beeflow::bundled

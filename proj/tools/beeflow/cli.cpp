#include "beeflow/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "beeflow/bench.hpp"
#include "beeflow/bundled.hpp"
#include "beeflow/convert.hpp"
#include "beeflow/error.hpp"
#include "beeflow/formats.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/placement.hpp"
#include "beeflow/sim.hpp"
#include "beeflow/trace.hpp"

namespace beeflow::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string workflow;
  std::string input;
  std::string output;
  std::string from;
  std::string traces;
  std::string profiles;
  std::string policy = "io-contention";
  std::string placement = "contention-aware";
  std::string cluster;
  std::string scenario;
  std::string suite = "default";
  std::string mode;
  std::vector<std::string> partitions;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> payload_limit;
  std::optional<std::size_t> requests;
};

Config load_config() {
  const char* path = std::getenv("BEEFLOW_CONFIG");
  if (path == nullptr || *path == '\0') return {};
  return config_from_json(read_json_file(path));
}

void emit(const nlohmann::json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << dump_json(j);
  } else {
    write_json_file(path, j);
  }
}

int cmd_validate(const Options& o, std::ostream& out) {
  const WorkflowDef wf = workflow_from_json(read_json_file(o.workflow));
  const auto vs = validate(wf);
  for (const Violation& v : vs) out << v.code << ' ' << v.node_id << ": " << v.message << '\n';
  if (!vs.empty()) return 1;
  out << "ok " << wf.id() << ' ' << wf.size() << " nodes\n";
  return 0;
}

int cmd_convert(const Options& o, std::ostream& out) {
  const nlohmann::json src = read_json_file(o.input);
  const std::string id = fs::path(o.input).stem().stem().string();
  WorkflowDef wf = o.from == "dag" ? dag_to_bt(dag_from_json(src), id) : fsm_to_bt(fsm_from_json(src), id);
  emit(to_json(wf), o.output, out);
  return 0;
}

PartitionFile partition_file(const WorkflowDef& wf, const Options& o, const Config& cfg, std::ostream& err) {
  Profiles profiles;
  if (!o.profiles.empty()) {
    profiles = profiles_from_json(read_json_file(o.profiles));
  } else if (!o.traces.empty()) {
    if (!fs::exists(o.traces)) throw Error(Errc::IoError, "traces file not found: " + o.traces);
    profiles = estimate(ingest_file(o.traces), wf, cfg.default_profile);
  } else {
    err << "warning: no traces given, using default profiles\n";
    profiles = default_profiles(wf, cfg.default_profile);
  }
  PartitionOptions popt;
  popt.policy = parse_policy(o.policy);
  popt.expand.cap = cfg.expand_cap;
  PartitionResult r = partition(wf, profiles, popt);
  return {wf, std::move(profiles), std::move(r), popt.policy};
}

int cmd_partition(const Options& o, const Config& cfg, std::ostream& out, std::ostream& err) {
  const WorkflowDef wf = workflow_from_json(read_json_file(o.workflow));
  emit(to_json(partition_file(wf, o, cfg, err)), o.output, out);
  return 0;
}

PlacementPlan place_files(const std::vector<PartitionFile>& pfs, const ClusterSpec& cluster, const std::string& how,
                          std::uint64_t seed) {
  std::vector<ExpectedTimeline> tls;
  for (const PartitionFile& f : pfs) tls.push_back(align(f.tree, f.profiles));
  std::vector<PlacementWorkflow> pws;
  for (std::size_t i = 0; i < pfs.size(); ++i) pws.push_back({&pfs[i].tree, &tls[i], &pfs[i].result});
  switch (bench::parse_policy(how)) {
    case bench::Policy::ContentionAware: return place(pws, cluster);
    case bench::Policy::RoundRobin: return place_baseline(pws, cluster, Baseline::RoundRobin, seed);
    case bench::Policy::Random: return place_baseline(pws, cluster, Baseline::Random, seed);
    case bench::Policy::ColocateAll: return place_baseline(pws, cluster, Baseline::ColocateAll, seed);
  }
  return {};
}

int cmd_place(const Options& o, std::ostream& out) {
  std::vector<PartitionFile> pfs;
  for (const std::string& p : o.partitions) pfs.push_back(partition_file_from_json(read_json_file(p)));
  const ClusterSpec cluster = cluster_from_json(read_json_file(o.cluster));
  if (const auto problems = check_cluster(cluster); !problems.empty()) {
    throw Error(Errc::InvalidArgument, o.cluster + ": " + problems.front());
  }
  emit(to_json(place_files(pfs, cluster, o.placement, o.seed.value_or(0))), o.output, out);
  return 0;
}

void apply_overrides(Scenario& s, const Options& o, const Config& cfg) {
  s.payload_limit_bytes = o.payload_limit.value_or(cfg.payload_limit_bytes);
  if (!o.mode.empty()) s.mode = parse_mode(o.mode);
  if (o.seed) s.rng_seed = *o.seed;
  if (o.requests) s.requests_per_workflow = *o.requests;
}

void write_report(const SimReport& rep, const fs::path& dir) {
  write_json_file(dir / "report.json", to_json(rep));
  std::ostringstream g;
  write_gantt_csv(rep, g);
  write_text_file(dir / "gantt.csv", g.str());
  std::ostringstream tx;
  write_node_tx_csv(rep.node_tx, tx);
  write_text_file(dir / "node_tx.csv", tx.str());
}

int cmd_simulate(const Options& o, const Config& cfg, std::ostream& out) {
  Scenario s = load_scenario(o.scenario);
  apply_overrides(s, o, cfg);
  const SimReport rep = simulate(s);
  write_report(rep, o.output);
  write_latency_summary(latency_summary(rep), out);
  return 0;
}

int cmd_refresh(const Options& o, const Config& cfg, std::ostream& out) {
  if (!fs::exists(o.traces)) throw Error(Errc::IoError, "traces file not found: " + o.traces);
  TraceStore observed = ingest_file(o.traces);
  Scenario s = load_scenario(o.scenario);
  apply_overrides(s, o, cfg);
  const SimReport rep = simulate(s);

  // Observed traces first, then the ones this run produced.
  TraceStore store;
  for (const TraceRecord& r : observed.records()) store.add(r);
  const std::vector<TraceRecord> emitted = report_traces(rep);
  for (const TraceRecord& r : emitted) store.add(r);

  const fs::path dir = o.output;
  {
    std::ostringstream t;
    write_traces(t, emitted);
    write_text_file(dir / "traces.jsonl", t.str());
  }
  ScenarioFile sf;
  std::vector<PartitionFile> pfs;
  for (const SimWorkflow& w : s.workflows) {
    PartitionOptions popt;
    popt.policy = parse_policy(o.policy);
    popt.expand.cap = cfg.expand_cap;
    Profiles prof = estimate(store, w.tree, cfg.default_profile);
    PartitionResult r = partition(w.tree, prof, popt);
    pfs.push_back({w.tree, std::move(prof), std::move(r), popt.policy});
    const std::string file = "partition-" + w.tree.id() + ".json";
    write_json_file(dir / file, to_json(pfs.back()));
    sf.partitions.push_back(file);
  }
  const PlacementPlan plan = place_files(pfs, s.cluster, o.placement, s.rng_seed);
  write_json_file(dir / "plan.json", to_json(plan));
  write_json_file(dir / "cluster.json", to_json(s.cluster));
  sf.plan = "plan.json";
  sf.cluster = "cluster.json";
  sf.mode = s.mode;
  sf.requests_per_workflow = s.requests_per_workflow;
  sf.rng_seed = s.rng_seed;
  sf.composite_overhead_s = s.composite_overhead_s;
  sf.jitter = s.jitter;
  write_json_file(dir / "scenario.json", to_json(sf));
  for (const std::string& q : plan.order) out << q << ' ' << plan.assignments.at(q) << '\n';
  return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const nlohmann::json v = bench::run_suite(o.suite, o.output);
  for (const auto& c : v.at("checks")) {
    out << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << '\n';
  }
  return v.at("pass").get<bool>() ? 0 : 1;
}

int cmd_examples(const Options& o, std::ostream& out) {
  for (const fs::path& p : bundled::write_examples(o.output)) out << p.string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"beeflow: behavior-tree workflow partitioning, placement and simulation"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> policies = {"io-contention", "longest-path"};
  const std::vector<std::string> placements = {"contention-aware", "round-robin", "random", "colocate-all"};
  const std::vector<std::string> modes = {"single", "co-run"};

  auto* validate_cmd = app.add_subcommand("validate", "check a workflow file");
  validate_cmd->add_option("workflow", o.workflow)->required();

  auto* convert_cmd = app.add_subcommand("convert", "convert a DAG or FSM definition to a workflow");
  convert_cmd->add_option("--from", o.from)->required()->check(CLI::IsMember({"dag", "fsm"}));
  convert_cmd->add_option("input", o.input)->required();
  convert_cmd->add_option("output", o.output, "output file (stdout when omitted)");

  auto* partition_cmd = app.add_subcommand("partition", "partition a workflow into subpaths");
  partition_cmd->add_option("workflow", o.workflow)->required();
  partition_cmd->add_option("--traces", o.traces, "JSON Lines trace file, optionally gzip-compressed");
  partition_cmd->add_option("--profiles", o.profiles, "profile file used instead of traces");
  partition_cmd->add_option("--policy", o.policy)->check(CLI::IsMember(policies));
  partition_cmd->add_option("-o,--out", o.output, "output file (stdout when omitted)");

  auto* place_cmd = app.add_subcommand("place", "place partitioned workflows on a cluster");
  place_cmd->add_option("partitions", o.partitions)->required();
  place_cmd->add_option("--cluster", o.cluster)->required();
  place_cmd->add_option("--placement", o.placement)->check(CLI::IsMember(placements));
  place_cmd->add_option("--seed", o.seed);
  place_cmd->add_option("-o,--out", o.output, "output file (stdout when omitted)");

  auto* sim_cmd = app.add_subcommand("simulate", "simulate a scenario");
  sim_cmd->add_option("scenario", o.scenario)->required();
  sim_cmd->add_option("--out", o.output)->required();
  sim_cmd->add_option("--mode", o.mode)->check(CLI::IsMember(modes));
  sim_cmd->add_option("--seed", o.seed);
  sim_cmd->add_option("--requests", o.requests);
  sim_cmd->add_option("--payload-limit", o.payload_limit);

  auto* refresh_cmd = app.add_subcommand("refresh", "simulate, re-estimate, re-partition and re-place");
  refresh_cmd->add_option("scenario", o.scenario)->required();
  refresh_cmd->add_option("traces", o.traces)->required();
  refresh_cmd->add_option("--out", o.output)->required();
  refresh_cmd->add_option("--policy", o.policy)->check(CLI::IsMember(policies));
  refresh_cmd->add_option("--placement", o.placement)->check(CLI::IsMember(placements));
  refresh_cmd->add_option("--mode", o.mode)->check(CLI::IsMember(modes));
  refresh_cmd->add_option("--seed", o.seed);
  refresh_cmd->add_option("--payload-limit", o.payload_limit);

  auto* bench_cmd = app.add_subcommand("bench", "compare placement policies");
  bench_cmd->add_option("--suite", o.suite);
  bench_cmd->add_option("--out", o.output)->required();

  auto* examples_cmd = app.add_subcommand("examples", "write the bundled example files");
  examples_cmd->add_option("--out", o.output)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const Config cfg = load_config();
    if (validate_cmd->parsed()) return cmd_validate(o, out);
    if (convert_cmd->parsed()) return cmd_convert(o, out);
    if (partition_cmd->parsed()) return cmd_partition(o, cfg, out, err);
    if (place_cmd->parsed()) return cmd_place(o, out);
    if (sim_cmd->parsed()) return cmd_simulate(o, cfg, out);
    if (refresh_cmd->parsed()) return cmd_refresh(o, cfg, out);
    if (bench_cmd->parsed()) return cmd_bench(o, out);
    if (examples_cmd->parsed()) return cmd_examples(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_input_error() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace beeflow::cli

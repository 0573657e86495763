#include "beeflow/formats.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "beeflow/error.hpp"

namespace beeflow {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, end);
}

nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, origin + ": " + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) { write_text_file(path, dump_json(j)); }

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw Error(Errc::ParseError, ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ParseError, ctx + ": missing field " + key);
  return *it;
}

template <typename T>
T get_as(const json& v, const std::string& ctx, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::ParseError, ctx + ": field " + key + " has the wrong type");
  }
}

template <typename T>
T req(const json& j, const char* key, const std::string& ctx) {
  return get_as<T>(need(j, key, ctx), ctx, key);
}

template <typename T>
T opt(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.is_object()) throw Error(Errc::ParseError, ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return get_as<T>(*it, ctx, key);
}

void check_format(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw Error(Errc::ParseError, ctx + ": expected an object");
  auto it = j.find("format");
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<int>() != kFormatVersion) {
    throw Error(Errc::ParseError, ctx + ": unsupported format version " + it->dump());
  }
}

json agg_json(const AggSpec& a) {
  switch (a.kind) {
    case AggSpec::Kind::AllSucceed: return {{"kind", "all_succeed"}};
    case AggSpec::Kind::MOutOfN: return {{"kind", "m_out_of_n"}, {"m", a.m}};
    case AggSpec::Kind::Named: return {{"kind", "named"}, {"name", a.name}};
  }
  return {{"kind", "all_succeed"}};
}

AggSpec agg_from(const json& j, const std::string& ctx) {
  const auto kind = req<std::string>(j, "kind", ctx);
  if (kind == "all_succeed") return AggSpec::all_succeed();
  if (kind == "m_out_of_n") return AggSpec::m_out_of_n(req<int>(j, "m", ctx));
  if (kind == "named") return AggSpec::named(req<std::string>(j, "name", ctx));
  throw Error(Errc::ParseError, ctx + ": unknown agg kind " + kind);
}

json tail_json(const TailSpec& t) {
  switch (t.kind) {
    case TailSpec::Kind::Once: return {{"kind", "once"}};
    case TailSpec::Kind::Negate: return {{"kind", "negate"}};
    case TailSpec::Kind::Retry: return {{"kind", "retry"}, {"max_n", t.max_n}};
    case TailSpec::Kind::LoopTillEnd: return {{"kind", "loop_till_end"}, {"flag_key", t.key}};
    case TailSpec::Kind::Named: return {{"kind", "named"}, {"name", t.key}};
  }
  return {{"kind", "once"}};
}

TailSpec tail_from(const json& j, const std::string& ctx) {
  const auto kind = req<std::string>(j, "kind", ctx);
  if (kind == "once") return TailSpec::once();
  if (kind == "negate") return TailSpec::negate();
  if (kind == "retry") return TailSpec::retry(req<int>(j, "max_n", ctx));
  if (kind == "loop_till_end") return TailSpec::loop_till_end(opt<std::string>(j, "flag_key", "END", ctx));
  if (kind == "named") return TailSpec::named(req<std::string>(j, "name", ctx));
  throw Error(Errc::ParseError, ctx + ": unknown tail kind " + kind);
}

BtNode node_from(const json& j, const std::string& ctx) {
  const auto type = req<std::string>(j, "type", ctx);
  BtNode n;
  n.id = opt<std::string>(j, "id", "", ctx);
  const std::string here = ctx + "/" + (n.id.empty() ? type : n.id);
  auto children = [&]() {
    std::vector<BtNode> out;
    if (auto it = j.find("children"); it != j.end()) {
      if (!it->is_array()) throw Error(Errc::ParseError, here + ": children must be an array");
      for (const json& c : *it) out.push_back(node_from(c, here));
    }
    return out;
  };
  if (type == "leaf") {
    n.kind = NodeKind::Leaf;
    n.function_id = opt<std::string>(j, "function", n.id, here);
    n.synthetic = opt<bool>(j, "synthetic", false, here);
    n.children = children();
  } else if (type == "sequence") {
    n.kind = NodeKind::Sequence;
    n.children = children();
  } else if (type == "fallback") {
    n.kind = NodeKind::Fallback;
    n.children = children();
  } else if (type == "parallel") {
    n.kind = NodeKind::Parallel;
    if (auto it = j.find("agg"); it != j.end()) n.agg = agg_from(*it, here);
    n.children = children();
  } else if (type == "decorator") {
    n.kind = NodeKind::Decorator;
    n.tail = tail_from(need(j, "tail", here), here);
    n.children = children();
    if (auto it = j.find("child"); it != j.end() && !it->is_null()) n.children.insert(n.children.begin(), node_from(*it, here));
  } else {
    throw Error(Errc::ParseError, here + ": unknown node type " + type);
  }
  return n;
}

}  // namespace

json to_json(const FunctionSpec& f) {
  json j{{"id", f.id},
         {"mem_request_bytes", f.mem_request_bytes},
         {"cpu_request_cores", f.cpu_request_cores},
         {"executor_kind", f.executor_kind}};
  if (!f.params.empty()) j["params"] = f.params;
  return j;
}

FunctionSpec function_from_json(const json& j) {
  const std::string ctx = "function";
  FunctionSpec f;
  f.id = req<std::string>(j, "id", ctx);
  const std::string here = ctx + " " + f.id;
  f.mem_request_bytes = opt<std::int64_t>(j, "mem_request_bytes", f.mem_request_bytes, here);
  f.cpu_request_cores = opt<double>(j, "cpu_request_cores", f.cpu_request_cores, here);
  f.executor_kind = opt<std::string>(j, "executor_kind", f.executor_kind, here);
  if (auto it = j.find("params"); it != j.end()) {
    if (!it->is_object()) throw Error(Errc::ParseError, here + ": params must be an object");
    f.params = *it;
  }
  return f;
}

json to_json(const BtNode& n) {
  json j;
  j["type"] = std::string(to_string(n.kind));
  if (!n.id.empty()) j["id"] = n.id;
  switch (n.kind) {
    case NodeKind::Leaf:
      j["function"] = n.function_id;
      if (n.synthetic) j["synthetic"] = true;
      break;
    case NodeKind::Parallel: j["agg"] = agg_json(n.agg); break;
    case NodeKind::Decorator: j["tail"] = tail_json(n.tail); break;
    default: break;
  }
  if (n.kind == NodeKind::Decorator && n.children.size() == 1) {
    j["child"] = to_json(n.children.front());
  } else if (n.kind != NodeKind::Leaf || !n.children.empty()) {
    json kids = json::array();
    for (const BtNode& c : n.children) kids.push_back(to_json(c));
    j["children"] = std::move(kids);
  }
  return j;
}

BtNode node_from_json(const json& j) { return node_from(j, "root"); }

json to_json(const WorkflowDef& wf) {
  json fns = json::array();
  for (const FunctionSpec& f : wf.function_list()) fns.push_back(to_json(f));
  json j{{"format", kFormatVersion}, {"workflow_id", wf.id()}};
  if (!wf.converted_from().empty()) j["converted_from"] = wf.converted_from();
  j["functions"] = std::move(fns);
  j["root"] = wf.size() == 0 ? json(nullptr) : to_json(wf.to_bt());
  return j;
}

WorkflowDef workflow_from_json(const json& j) {
  const std::string ctx = "workflow";
  check_format(j, ctx);
  const auto id = req<std::string>(j, "workflow_id", ctx);
  std::vector<FunctionSpec> fns;
  if (auto it = j.find("functions"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::ParseError, ctx + ": functions must be an array");
    for (const json& f : *it) fns.push_back(function_from_json(f));
  }
  WorkflowDef wf(id, node_from(need(j, "root", ctx), ctx), std::move(fns));
  wf.set_converted_from(opt<std::string>(j, "converted_from", "", ctx));
  return wf;
}

// ---------------------------------------------------------------------------

json to_json(const DagDef& d) {
  json edges = json::array();
  for (const auto& [u, v] : d.edges) edges.push_back(json::array({u, v}));
  json j{{"format", kFormatVersion}, {"nodes", d.nodes}, {"edges", std::move(edges)}};
  if (!d.functions.empty()) {
    json fns = json::array();
    for (const FunctionSpec& f : d.functions) fns.push_back(to_json(f));
    j["functions"] = std::move(fns);
  }
  return j;
}

DagDef dag_from_json(const json& j) {
  const std::string ctx = "dag";
  check_format(j, ctx);
  DagDef d;
  d.nodes = req<std::vector<std::string>>(j, "nodes", ctx);
  const json& edges = need(j, "edges", ctx);
  if (!edges.is_array()) throw Error(Errc::ParseError, ctx + ": edges must be an array");
  for (const json& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
      throw Error(Errc::ParseError, ctx + ": each edge is a [from, to] pair of strings");
    }
    d.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  if (auto it = j.find("functions"); it != j.end()) {
    for (const json& f : *it) d.functions.push_back(function_from_json(f));
  }
  return d;
}

json to_json(const FsmDef& f) {
  json trans = json::array();
  for (const FsmTransition& t : f.transitions) {
    trans.push_back({{"state", t.state}, {"outcome", t.outcome}, {"next", t.next}});
  }
  json j{{"states", f.states}, {"initial", f.initial}, {"body", f.body}, {"transitions", std::move(trans)}};
  if (!f.id.empty()) j["id"] = f.id;
  if (!f.host.empty()) j["host"] = f.host;
  if (!f.nested.empty()) {
    json nested = json::array();
    for (const FsmDef& c : f.nested) nested.push_back(to_json(c));
    j["nested"] = std::move(nested);
  }
  if (!f.functions.empty()) {
    json fns = json::array();
    for (const FunctionSpec& s : f.functions) fns.push_back(to_json(s));
    j["functions"] = std::move(fns);
  }
  return j;
}

FsmDef fsm_from_json(const json& j) {
  const std::string ctx = "fsm";
  check_format(j, ctx);
  FsmDef f;
  f.id = opt<std::string>(j, "id", "", ctx);
  f.host = opt<std::string>(j, "host", "", ctx);
  f.states = req<std::vector<std::string>>(j, "states", ctx);
  f.initial = req<std::string>(j, "initial", ctx);
  f.body = opt<std::map<std::string, std::string>>(j, "body", {}, ctx);
  const json& trans = need(j, "transitions", ctx);
  if (!trans.is_array()) throw Error(Errc::ParseError, ctx + ": transitions must be an array");
  for (const json& t : trans) {
    f.transitions.push_back(
        {req<std::string>(t, "state", ctx), req<std::string>(t, "outcome", ctx), req<std::string>(t, "next", ctx)});
  }
  if (auto it = j.find("nested"); it != j.end()) {
    for (const json& c : *it) f.nested.push_back(fsm_from_json(c));
  }
  if (auto it = j.find("functions"); it != j.end()) {
    for (const json& s : *it) f.functions.push_back(function_from_json(s));
  }
  return f;
}

// ---------------------------------------------------------------------------

json to_json(const FunctionProfile& p) {
  return json{{"init_delay_s", p.init_delay_s},     {"input_delay_s", p.input_delay_s},
              {"exec_delay_s", p.exec_delay_s},     {"output_delay_s", p.output_delay_s},
              {"input_bytes", p.input_bytes},       {"output_bytes", p.output_bytes},
              {"exec_prob", p.exec_prob},           {"fail_prob", p.fail_prob},
              {"samples", p.samples},               {"defaulted", p.defaulted}};
}

FunctionProfile profile_from_json(const json& j, const FunctionProfile& base) {
  const std::string ctx = "profile";
  FunctionProfile p = base;
  p.leaf_id = opt<std::string>(j, "leaf_id", p.leaf_id, ctx);
  p.init_delay_s = opt<double>(j, "init_delay_s", p.init_delay_s, ctx);
  p.input_delay_s = opt<double>(j, "input_delay_s", p.input_delay_s, ctx);
  p.exec_delay_s = opt<double>(j, "exec_delay_s", p.exec_delay_s, ctx);
  p.output_delay_s = opt<double>(j, "output_delay_s", p.output_delay_s, ctx);
  p.input_bytes = opt<double>(j, "input_bytes", p.input_bytes, ctx);
  p.output_bytes = opt<double>(j, "output_bytes", p.output_bytes, ctx);
  p.exec_prob = opt<double>(j, "exec_prob", p.exec_prob, ctx);
  p.fail_prob = opt<double>(j, "fail_prob", p.fail_prob, ctx);
  p.samples = opt<std::size_t>(j, "samples", p.samples, ctx);
  p.defaulted = opt<bool>(j, "defaulted", p.defaulted, ctx);
  const double ds[] = {p.init_delay_s, p.input_delay_s, p.exec_delay_s, p.output_delay_s, p.input_bytes, p.output_bytes};
  for (double d : ds) {
    if (!(d >= 0.0)) throw Error(Errc::ParseError, ctx + " " + p.leaf_id + ": delays and sizes must be >= 0");
  }
  if (!(p.exec_prob >= 0.0 && p.exec_prob <= 1.0) || !(p.fail_prob >= 0.0 && p.fail_prob <= 1.0)) {
    throw Error(Errc::ParseError, ctx + " " + p.leaf_id + ": probabilities must lie in [0, 1]");
  }
  return p;
}

json to_json(const Profiles& p) {
  json fns = json::object();
  for (const auto& [id, prof] : p.functions) fns[id] = to_json(prof);
  json loops = json::object();
  for (const auto& [id, l] : p.loops) loops[id] = {{"expected_iterations", l.expected_iterations}};
  return json{{"functions", std::move(fns)}, {"loops", std::move(loops)}};
}

Profiles profiles_from_json(const json& j) {
  Profiles p;
  if (auto it = j.find("functions"); it != j.end()) {
    for (const auto& [id, v] : it->items()) {
      FunctionProfile f = profile_from_json(v);
      f.leaf_id = id;
      p.functions.emplace(id, f);
    }
  }
  if (auto it = j.find("loops"); it != j.end()) {
    for (const auto& [id, v] : it->items()) {
      const double e = req<double>(v, "expected_iterations", "loop " + id);
      if (!(e >= 1.0)) throw Error(Errc::ParseError, "loop " + id + ": expected_iterations must be >= 1");
      p.loops.emplace(id, LoopProfile{id, e});
    }
  }
  return p;
}

Config config_from_json(const json& j) {
  const std::string ctx = "config";
  check_format(j, ctx);
  Config c;
  if (auto it = j.find("default_profile"); it != j.end()) c.default_profile = profile_from_json(*it);
  c.default_profile.defaulted = true;
  c.default_profile.samples = 0;
  c.payload_limit_bytes = opt<std::size_t>(j, "payload_limit_bytes", c.payload_limit_bytes, ctx);
  c.expand_cap = opt<std::size_t>(j, "expand_cap", c.expand_cap, ctx);
  if (c.expand_cap < 1) throw Error(Errc::ParseError, ctx + ": expand_cap must be >= 1");
  return c;
}

json to_json(const Config& c) {
  json prof = to_json(c.default_profile);
  prof.erase("samples");
  prof.erase("defaulted");
  return json{{"format", kFormatVersion},
              {"default_profile", std::move(prof)},
              {"payload_limit_bytes", c.payload_limit_bytes},
              {"expand_cap", c.expand_cap}};
}

// ---------------------------------------------------------------------------

json to_json(const PartitionResult& r) {
  json sps = json::array();
  for (const Subpath& sp : r.subpaths) sps.push_back({{"subpath_id", sp.subpath_id}, {"leaves", sp.leaves}});
  return json{{"workflow_id", r.workflow_id}, {"residual_phases", r.residual_phases}, {"subpaths", std::move(sps)}};
}

PartitionResult partition_result_from_json(const json& j) {
  const std::string ctx = "partition";
  PartitionResult r;
  r.workflow_id = req<std::string>(j, "workflow_id", ctx);
  r.residual_phases = opt<std::size_t>(j, "residual_phases", 0, ctx);
  const json& sps = need(j, "subpaths", ctx);
  if (!sps.is_array()) throw Error(Errc::ParseError, ctx + ": subpaths must be an array");
  for (const json& s : sps) {
    r.subpaths.push_back(
        {req<std::string>(s, "subpath_id", ctx), r.workflow_id, req<std::vector<std::string>>(s, "leaves", ctx)});
  }
  return r;
}

json to_json(const PartitionFile& f) {
  json j = to_json(f.result);
  j["format"] = kFormatVersion;
  j["policy"] = to_string(f.policy);
  j["workflow"] = to_json(f.tree);
  j["profiles"] = to_json(f.profiles);
  return j;
}

PartitionFile partition_file_from_json(const json& j) {
  const std::string ctx = "partition";
  check_format(j, ctx);
  PartitionFile f;
  f.result = partition_result_from_json(j);
  f.policy = parse_policy(opt<std::string>(j, "policy", "io-contention", ctx));
  f.tree = workflow_from_json(need(j, "workflow", ctx));
  if (f.tree.id() != f.result.workflow_id) {
    throw Error(Errc::ParseError, ctx + ": workflow_id does not match the embedded workflow");
  }
  f.profiles = j.contains("profiles") ? profiles_from_json(j.at("profiles")) : default_profiles(f.tree);
  return f;
}

json to_json(const ClusterSpec& c) {
  json nodes = json::array();
  for (const NodeSpec& n : c.nodes) {
    nodes.push_back({{"node_id", n.node_id},
                     {"cpu_cores", n.cpu_cores},
                     {"mem_bytes", n.mem_bytes},
                     {"io_bw_Bps", n.io_bw_Bps}});
  }
  return json{{"format", kFormatVersion}, {"nodes", std::move(nodes)}};
}

ClusterSpec cluster_from_json(const json& j) {
  const std::string ctx = "cluster";
  check_format(j, ctx);
  ClusterSpec c;
  const json& nodes = need(j, "nodes", ctx);
  if (!nodes.is_array()) throw Error(Errc::ParseError, ctx + ": nodes must be an array");
  for (const json& n : nodes) {
    NodeSpec s;
    s.node_id = req<std::string>(n, "node_id", ctx);
    const std::string here = ctx + " node " + s.node_id;
    s.cpu_cores = req<double>(n, "cpu_cores", here);
    s.mem_bytes = req<std::int64_t>(n, "mem_bytes", here);
    s.io_bw_Bps = req<double>(n, "io_bw_Bps", here);
    c.nodes.push_back(std::move(s));
  }
  return c;
}

json to_json(const PlacementPlan& p) {
  json per_node = json::object();
  for (const auto& [n, c] : p.per_node_cost) per_node[n] = c;
  return json{{"format", kFormatVersion},
              {"assignments", p.assignments},
              {"per_node_cost", std::move(per_node)},
              {"total_cost", p.total_cost},
              {"order", p.order}};
}

PlacementPlan plan_from_json(const json& j) {
  const std::string ctx = "plan";
  check_format(j, ctx);
  PlacementPlan p;
  p.assignments = req<std::map<std::string, std::string>>(j, "assignments", ctx);
  p.per_node_cost = opt<std::map<std::string, double>>(j, "per_node_cost", {}, ctx);
  p.total_cost = opt<double>(j, "total_cost", 0.0, ctx);
  p.order = opt<std::vector<std::string>>(j, "order", {}, ctx);
  return p;
}

json to_json(const ScenarioFile& s) {
  return json{{"format", kFormatVersion},
              {"partitions", s.partitions},
              {"plan", s.plan},
              {"cluster", s.cluster},
              {"mode", std::string(to_string(s.mode))},
              {"requests_per_workflow", s.requests_per_workflow},
              {"rng_seed", s.rng_seed},
              {"composite_overhead_s", s.composite_overhead_s},
              {"jitter", s.jitter}};
}

ScenarioFile scenario_file_from_json(const json& j) {
  const std::string ctx = "scenario";
  check_format(j, ctx);
  ScenarioFile s;
  s.partitions = req<std::vector<std::string>>(j, "partitions", ctx);
  s.plan = req<std::string>(j, "plan", ctx);
  s.cluster = req<std::string>(j, "cluster", ctx);
  try {
    s.mode = parse_mode(opt<std::string>(j, "mode", "single", ctx));
  } catch (const Error& e) {
    throw Error(Errc::ParseError, ctx + ": " + e.detail());
  }
  s.requests_per_workflow = opt<std::size_t>(j, "requests_per_workflow", 1, ctx);
  s.rng_seed = opt<std::uint64_t>(j, "rng_seed", 0, ctx);
  s.composite_overhead_s = opt<double>(j, "composite_overhead_s", 0.0, ctx);
  s.jitter = opt<double>(j, "jitter", 0.0, ctx);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const ScenarioFile f = scenario_file_from_json(read_json_file(path));
  const std::filesystem::path dir = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : dir / q;
  };
  Scenario s;
  for (const std::string& p : f.partitions) {
    PartitionFile pf = partition_file_from_json(read_json_file(resolve(p)));
    s.workflows.push_back({std::move(pf.tree), std::move(pf.profiles), std::move(pf.result)});
  }
  s.plan = plan_from_json(read_json_file(resolve(f.plan)));
  s.cluster = cluster_from_json(read_json_file(resolve(f.cluster)));
  s.mode = f.mode;
  s.requests_per_workflow = f.requests_per_workflow;
  s.rng_seed = f.rng_seed;
  s.composite_overhead_s = f.composite_overhead_s;
  s.jitter = f.jitter;
  return s;
}

}  // namespace beeflow

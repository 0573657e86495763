#include "beeflow/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "beeflow/error.hpp"

namespace beeflow {

std::string_view to_string(TraceStatus s) noexcept {
  switch (s) {
    case TraceStatus::Success: return "success";
    case TraceStatus::Failure: return "failure";
    case TraceStatus::Skipped: return "skipped";
  }
  return "success";
}

nlohmann::json to_json(const TraceRecord& r) {
  return nlohmann::json{{"workflow_id", r.workflow_id},
                        {"request_id", r.request_id},
                        {"leaf_id", r.leaf_id},
                        {"t_init_start", r.t_init_start},
                        {"t_input_start", r.t_input_start},
                        {"t_exec_start", r.t_exec_start},
                        {"t_output_start", r.t_output_start},
                        {"t_end", r.t_end},
                        {"input_bytes", r.input_bytes},
                        {"output_bytes", r.output_bytes},
                        {"status", std::string(to_string(r.status))},
                        {"decorator_iteration", r.decorator_iteration}};
}

namespace {

std::string at_line(std::size_t line) { return line > 0 ? "line " + std::to_string(line) + ": " : std::string(); }

template <typename T>
T field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ParseError, at_line(line) + "missing field " + key);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ParseError, at_line(line) + "field " + key + " has the wrong type");
  }
}

std::string id_field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it != j.end() && it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  return field<std::string>(j, key, line);
}

}  // namespace

TraceRecord trace_record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw Error(Errc::ParseError, at_line(line) + "record is not an object");
  TraceRecord r;
  r.workflow_id = field<std::string>(j, "workflow_id", line);
  r.request_id = id_field(j, "request_id", line);
  r.leaf_id = field<std::string>(j, "leaf_id", line);
  r.t_init_start = field<double>(j, "t_init_start", line);
  r.t_input_start = field<double>(j, "t_input_start", line);
  r.t_exec_start = field<double>(j, "t_exec_start", line);
  r.t_output_start = field<double>(j, "t_output_start", line);
  r.t_end = field<double>(j, "t_end", line);
  r.input_bytes = field<std::int64_t>(j, "input_bytes", line);
  r.output_bytes = field<std::int64_t>(j, "output_bytes", line);
  const std::string status = field<std::string>(j, "status", line);
  if (status == "success") {
    r.status = TraceStatus::Success;
  } else if (status == "failure") {
    r.status = TraceStatus::Failure;
  } else if (status == "skipped") {
    r.status = TraceStatus::Skipped;
  } else {
    throw Error(Errc::ParseError, at_line(line) + "unknown status " + status);
  }
  if (j.contains("decorator_iteration")) r.decorator_iteration = field<std::uint32_t>(j, "decorator_iteration", line);

  if (r.input_bytes < 0 || r.output_bytes < 0) throw Error(Errc::ParseError, at_line(line) + "negative byte count");
  const double ts[] = {r.t_init_start, r.t_input_start, r.t_exec_start, r.t_output_start, r.t_end};
  static const char* names[] = {"t_init_start", "t_input_start", "t_exec_start", "t_output_start", "t_end"};
  for (int i = 1; i < 5; ++i) {
    if (ts[i] < ts[i - 1]) {
      throw Error(Errc::TimestampOrderViolation,
                  at_line(line) + names[i] + " precedes " + names[i - 1] + " for leaf " + r.leaf_id);
    }
  }
  return r;
}

void TraceStore::add(TraceRecord r) {
  const std::size_t idx = records_.size();
  index_[{r.workflow_id, r.leaf_id}].push_back(idx);
  ++requests_[r.workflow_id][r.request_id];
  records_.push_back(std::move(r));
}

std::vector<const TraceRecord*> TraceStore::for_leaf(std::string_view workflow_id, std::string_view leaf_id) const {
  std::vector<const TraceRecord*> out;
  auto it = index_.find(std::pair<std::string, std::string>(workflow_id, leaf_id));
  if (it == index_.end()) return out;
  for (std::size_t i : it->second) out.push_back(&records_[i]);
  return out;
}

std::size_t TraceStore::requests(std::string_view workflow_id) const {
  auto it = requests_.find(workflow_id);
  return it == requests_.end() ? 0 : it->second.size();
}

TraceStore ingest(std::istream& in) {
  TraceStore store;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::ParseError, at_line(line) + e.what());
    }
    store.add(trace_record_from_json(j, line));
  }
  return store;
}

TraceStore ingest_file(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw Error(Errc::IoError, "cannot open " + path.string());
  std::string data;
  char buf[1 << 15];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) data.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = gzerror(f, &err);
  const std::string what = msg != nullptr ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw Error(Errc::IoError, path.string() + ": " + what);
  std::istringstream in(data);
  return ingest(in);
}

void write_traces(std::ostream& out, std::span<const TraceRecord> records) {
  for (const TraceRecord& r : records) out << to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------

FunctionProfile default_profile() { return FunctionProfile{}; }

namespace {

FunctionProfile zero_profile(const std::string& leaf_id) {
  FunctionProfile p;
  p.leaf_id = leaf_id;
  p.init_delay_s = p.input_delay_s = p.exec_delay_s = p.output_delay_s = 0.0;
  p.input_bytes = p.output_bytes = 0.0;
  return p;
}

NodeIndex first_leaf(const WorkflowDef& tree, NodeIndex n) {
  while (!tree.node(n).is_leaf()) n = tree.node(n).children.front();
  return n;
}

std::optional<NodeIndex> innermost_decorator(const WorkflowDef& tree, NodeIndex n) {
  for (auto p = tree.node(n).parent; p; p = tree.node(*p).parent) {
    if (tree.node(*p).kind == NodeKind::Decorator) return *p;
  }
  return std::nullopt;
}

}  // namespace

Profiles default_profiles(const WorkflowDef& tree, const FunctionProfile& defaults) {
  Profiles out;
  for (NodeIndex l : tree.leaves()) {
    const TreeNode& n = tree.node(l);
    FunctionProfile p = n.synthetic ? zero_profile(n.id) : defaults;
    p.leaf_id = n.id;
    p.samples = 0;
    p.defaulted = true;
    out.functions.insert_or_assign(n.id, p);
  }
  return out;
}

Profiles estimate(const TraceStore& store, const WorkflowDef& tree, const FunctionProfile& defaults) {
  Profiles out = default_profiles(tree, defaults);
  const std::size_t requests = store.requests(tree.id());
  for (NodeIndex l : tree.leaves()) {
    const TreeNode& n = tree.node(l);
    const auto recs = store.for_leaf(tree.id(), n.id);
    std::size_t ran = 0;
    std::size_t failed = 0;
    FunctionProfile p = zero_profile(n.id);
    for (const TraceRecord* r : recs) {
      if (r->status == TraceStatus::Skipped) continue;
      ++ran;
      failed += r->status == TraceStatus::Failure ? 1 : 0;
      p.init_delay_s += r->t_input_start - r->t_init_start;
      p.input_delay_s += r->t_exec_start - r->t_input_start;
      p.exec_delay_s += r->t_output_start - r->t_exec_start;
      p.output_delay_s += r->t_end - r->t_output_start;
      p.input_bytes += static_cast<double>(r->input_bytes);
      p.output_bytes += static_cast<double>(r->output_bytes);
    }
    if (ran == 0) {
      // Seen only as skipped: keep default timings but record that it never ran.
      if (!recs.empty()) {
        FunctionProfile& d = out.functions.at(n.id);
        d.exec_prob = 0.0;
        d.samples = 0;
      }
      continue;
    }
    const double k = static_cast<double>(ran);
    p.init_delay_s /= k;
    p.input_delay_s /= k;
    p.exec_delay_s /= k;
    p.output_delay_s /= k;
    p.input_bytes /= k;
    p.output_bytes /= k;
    // Loop bodies log one record per pass, so the denominator is the larger
    // of requests and records (skipped passes included).
    const double opportunities = static_cast<double>(std::max(requests, recs.size()));
    p.exec_prob = std::min(1.0, k / opportunities);
    p.fail_prob = static_cast<double>(failed) / k;
    p.samples = ran;
    p.defaulted = false;
    out.functions.insert_or_assign(n.id, p);
  }

  // Expected passes of a decorator, from the first leaf of its subtree when
  // that leaf reports this decorator's iteration counter.
  for (const TreeNode& d : tree.nodes()) {
    if (d.kind != NodeKind::Decorator || d.children.empty()) continue;
    const NodeIndex d_index = tree.at(d.id);
    const NodeIndex l = first_leaf(tree, d.children.front());
    if (innermost_decorator(tree, l) != d_index) continue;
    std::size_t passes = 0;
    std::size_t entries = 0;
    for (const TraceRecord* r : store.for_leaf(tree.id(), tree.node(l).id)) {
      if (r->decorator_iteration == 0) continue;
      ++passes;
      entries += r->decorator_iteration == 1 ? 1 : 0;
    }
    if (entries == 0) continue;
    out.loops.insert_or_assign(
        d.id, LoopProfile{d.id, std::max(1.0, static_cast<double>(passes) / static_cast<double>(entries))});
  }
  return out;
}

}  // namespace beeflow

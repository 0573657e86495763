#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "beeflow/error.hpp"
#include "beeflow/formats.hpp"
#include "beeflow/sim.hpp"

namespace beeflow {

namespace {

constexpr const char* kPeriods[] = {"init", "input", "exec", "output"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(Errc::ParseError, "gantt line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

double parse_real(const std::string& s, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "gantt line " + std::to_string(lineno) + ": bad number " + s);
  }
}

}  // namespace

void write_gantt_csv(const SimReport& report, std::ostream& out) {
  out << "workflow_id,request_id,leaf_id,node_id,period,start_s,end_s\n";
  for (const GanttEntry& e : report.gantt) {
    const Interval* ivs[] = {&e.init, &e.input, &e.exec, &e.output};
    for (int p = 0; p < 4; ++p) {
      out << csv_field(e.workflow_id) << ',' << e.request_id << ',' << csv_field(e.leaf_id) << ','
          << csv_field(e.node_id) << ',' << kPeriods[p] << ',' << format_double(ivs[p]->start) << ','
          << format_double(ivs[p]->end) << '\n';
    }
  }
}

void export_gantt(const SimReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  write_gantt_csv(report, out);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::vector<GanttEntry> parse_gantt_csv(std::istream& in) {
  std::vector<GanttEntry> out;
  std::string line;
  std::size_t lineno = 0;
  int expect = 0;
  GanttEntry cur;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line.rfind("workflow_id,request_id,leaf_id,node_id,period,start_s,end_s", 0) != 0) {
        throw Error(Errc::ParseError, "gantt line 1: unexpected header");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line, lineno);
    if (f.size() != 7) throw Error(Errc::ParseError, "gantt line " + std::to_string(lineno) + ": expected 7 columns");
    if (f[4] != kPeriods[expect]) {
      throw Error(Errc::ParseError, "gantt line " + std::to_string(lineno) + ": expected period " + kPeriods[expect]);
    }
    const Interval iv{parse_real(f[5], lineno), parse_real(f[6], lineno)};
    if (expect == 0) {
      cur = GanttEntry{};
      cur.workflow_id = f[0];
      cur.request_id = static_cast<std::size_t>(parse_real(f[1], lineno));
      cur.leaf_id = f[2];
      cur.node_id = f[3];
    } else if (f[0] != cur.workflow_id || f[2] != cur.leaf_id || f[3] != cur.node_id) {
      throw Error(Errc::ParseError, "gantt line " + std::to_string(lineno) + ": period rows of one entry disagree");
    }
    Interval* slots[] = {&cur.init, &cur.input, &cur.exec, &cur.output};
    *slots[expect] = iv;
    if (++expect == 4) {
      out.push_back(cur);
      expect = 0;
    }
  }
  if (expect != 0) throw Error(Errc::ParseError, "gantt: truncated entry at end of file");
  return out;
}

std::vector<NodeSeries> node_tx_series(const SimReport& report, double window_s) {
  if (!(window_s > 0.0)) throw Error(Errc::InvalidArgument, "window_s must be positive");
  const auto windows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(report.span_s / window_s)));
  std::map<std::string, std::size_t> index;
  std::vector<NodeSeries> out;
  for (const std::string& n : report.nodes) {
    index.emplace(n, out.size());
    out.push_back({n, window_s, std::vector<double>(windows, 0.0)});
  }
  for (const IoSegment& seg : report.io_log) {
    auto it = index.find(seg.node_id);
    if (it == index.end()) {
      it = index.emplace(seg.node_id, out.size()).first;
      out.push_back({seg.node_id, window_s, std::vector<double>(windows, 0.0)});
    }
    std::vector<double>& bins = out[it->second].bytes_per_s;
    auto first = static_cast<std::size_t>(std::floor(seg.start / window_s));
    for (std::size_t w = first; w < bins.size(); ++w) {
      const double lo = std::max(seg.start, static_cast<double>(w) * window_s);
      const double hi = std::min(seg.end, static_cast<double>(w + 1) * window_s);
      if (hi <= lo) {
        if (static_cast<double>(w) * window_s >= seg.end) break;
        continue;
      }
      bins[w] += seg.rate_Bps * (hi - lo);
    }
    // A segment reaching past the last window (rounding) lands in it.
    const double tail_start = static_cast<double>(bins.size()) * window_s;
    if (seg.end > tail_start) bins.back() += seg.rate_Bps * (seg.end - std::max(seg.start, tail_start));
  }
  for (NodeSeries& s : out) {
    for (double& b : s.bytes_per_s) b /= window_s;
  }
  return out;
}

void write_node_tx_csv(const std::vector<NodeSeries>& series, std::ostream& out) {
  out << "node_id,window_start_s,bytes_per_s\n";
  for (const NodeSeries& s : series) {
    for (std::size_t w = 0; w < s.bytes_per_s.size(); ++w) {
      out << csv_field(s.node_id) << ',' << format_double(static_cast<double>(w) * s.window_s) << ','
          << format_double(s.bytes_per_s[w]) << '\n';
    }
  }
}

std::vector<TraceRecord> report_traces(const SimReport& report) {
  std::vector<TraceRecord> out;
  for (const Invocation& inv : report.invocations) {
    if (inv.synthetic) continue;
    TraceRecord r;
    r.workflow_id = inv.workflow_id;
    r.request_id = std::to_string(inv.request_id);
    r.leaf_id = inv.leaf_id;
    r.decorator_iteration = inv.iteration;
    if (inv.skipped || inv.gantt == SIZE_MAX) {
      r.t_init_start = r.t_input_start = r.t_exec_start = r.t_output_start = r.t_end = inv.ready_s;
      r.status = TraceStatus::Skipped;
    } else {
      const GanttEntry& g = report.gantt.at(inv.gantt);
      r.t_init_start = g.init.start;
      r.t_input_start = g.input.start;
      r.t_exec_start = g.exec.start;
      r.t_output_start = g.output.start;
      r.t_end = g.output.end;
      r.input_bytes = inv.input_bytes;
      r.output_bytes = inv.output_bytes;
      r.status = inv.status == ExecStatus::Success ? TraceStatus::Success : TraceStatus::Failure;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LatencySummary> latency_summary(const SimReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> by_wf;
  for (const RequestLatency& r : report.per_request) {
    auto [it, fresh] = by_wf.try_emplace(r.workflow_id);
    if (fresh) order.push_back(r.workflow_id);
    it->second.push_back(r.latency_s);
  }
  std::vector<LatencySummary> out;
  for (const std::string& w : order) {
    std::vector<double> v = by_wf.at(w);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    LatencySummary s;
    s.workflow_id = w;
    s.requests = n;
    s.min_s = v.front();
    s.max_s = v.back();
    s.median_s = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_s = v[std::max<std::size_t>(rank, 1) - 1];
    out.push_back(s);
  }
  return out;
}

void write_latency_summary(const std::vector<LatencySummary>& rows, std::ostream& out) {
  out << "workflow_id requests min_s median_s p95_s max_s\n";
  for (const LatencySummary& s : rows) {
    out << s.workflow_id << ' ' << s.requests << ' ' << format_double(s.min_s) << ' ' << format_double(s.median_s)
        << ' ' << format_double(s.p95_s) << ' ' << format_double(s.max_s) << '\n';
  }
}

nlohmann::json to_json(const SimReport& report) {
  using nlohmann::json;
  json reqs = json::array();
  for (const RequestLatency& r : report.per_request) {
    reqs.push_back({{"workflow_id", r.workflow_id},
                    {"request_id", r.request_id},
                    {"start_s", r.start_s},
                    {"end_s", r.end_s},
                    {"latency_s", r.latency_s},
                    {"status", r.status == ExecStatus::Success ? "success" : "failure"}});
  }
  json summary = json::array();
  for (const LatencySummary& s : latency_summary(report)) {
    summary.push_back({{"workflow_id", s.workflow_id},
                       {"requests", s.requests},
                       {"min_s", s.min_s},
                       {"median_s", s.median_s},
                       {"p95_s", s.p95_s},
                       {"max_s", s.max_s}});
  }
  json tx = json::object();
  std::int64_t moved = 0;
  for (const Transfer& t : report.transfers) moved += t.bytes;
  std::map<std::string, std::int64_t> per_node;
  for (const std::string& n : report.nodes) per_node[n] = 0;
  for (const Transfer& t : report.transfers) per_node[t.node_id] += t.bytes;
  for (const auto& [n, b] : per_node) tx[n] = b;
  return json{{"format", kFormatVersion},
              {"span_s", report.span_s},
              {"nodes", report.nodes},
              {"per_request", std::move(reqs)},
              {"latency_summary", std::move(summary)},
              {"transmitted_bytes", moved},
              {"node_transmitted_bytes", std::move(tx)},
              {"gantt_entries", report.gantt.size()},
              {"invocations", report.invocations.size()}};
}

}  // namespace beeflow

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beeflow/bt.hpp"

namespace beeflow {

enum class TraceStatus { Success, Failure, Skipped };

std::string_view to_string(TraceStatus s) noexcept;

/// One leaf invocation as seen by the runtime.
struct TraceRecord {
  std::string workflow_id;
  std::string request_id;
  std::string leaf_id;
  double t_init_start = 0.0;
  double t_input_start = 0.0;
  double t_exec_start = 0.0;
  double t_output_start = 0.0;
  double t_end = 0.0;
  std::int64_t input_bytes = 0;
  std::int64_t output_bytes = 0;
  TraceStatus status = TraceStatus::Success;
  std::uint32_t decorator_iteration = 0;

  bool operator==(const TraceRecord&) const = default;
};

nlohmann::json to_json(const TraceRecord& r);
/// Throws ParseError or TimestampOrderViolation; `line` only labels the message.
TraceRecord trace_record_from_json(const nlohmann::json& j, std::size_t line = 0);

/// Append-only collection of trace records indexed by (workflow, leaf).
class TraceStore {
 public:
  void add(TraceRecord r);
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::span<const TraceRecord> records() const noexcept { return records_; }
  std::vector<const TraceRecord*> for_leaf(std::string_view workflow_id, std::string_view leaf_id) const;
  /// Distinct request ids observed for a workflow.
  std::size_t requests(std::string_view workflow_id) const;

 private:
  std::vector<TraceRecord> records_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>, std::less<>> index_;
  std::map<std::string, std::map<std::string, std::size_t>, std::less<>> requests_;
};

/// JSON Lines, one record per line; blank lines are ignored.
TraceStore ingest(std::istream& in);
/// Reads plain or gzip-compressed JSON Lines.
TraceStore ingest_file(const std::filesystem::path& path);
void write_traces(std::ostream& out, std::span<const TraceRecord> records);

/// Mean four-period profile of one leaf.
struct FunctionProfile {
  std::string leaf_id;
  double init_delay_s = 0.5;
  double input_delay_s = 0.1;
  double exec_delay_s = 1.0;
  double output_delay_s = 0.1;
  double input_bytes = 1024.0 * 1024.0;
  double output_bytes = 1024.0 * 1024.0;
  /// Probability that the leaf runs in one pass of its context.
  double exec_prob = 1.0;
  /// Probability that a run of the leaf fails.
  double fail_prob = 0.0;
  std::size_t samples = 0;
  bool defaulted = true;

  double total_delay_s() const noexcept { return init_delay_s + input_delay_s + exec_delay_s + output_delay_s; }
  bool operator==(const FunctionProfile&) const = default;
};

struct LoopProfile {
  std::string node_id;
  double expected_iterations = 1.0;

  bool operator==(const LoopProfile&) const = default;
};

struct Profiles {
  std::map<std::string, FunctionProfile> functions;  // by leaf id
  std::map<std::string, LoopProfile> loops;          // by decorator node id

  bool operator==(const Profiles&) const = default;
};

/// Profile assigned to leaves without trace samples.
FunctionProfile default_profile();

/// Default profile for every leaf of `tree`, zero-cost for synthetic leaves.
Profiles default_profiles(const WorkflowDef& tree, const FunctionProfile& defaults = default_profile());

/// Means over non-skipped records; leaves without samples get `defaults`.
Profiles estimate(const TraceStore& store, const WorkflowDef& tree, const FunctionProfile& defaults = default_profile());

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const noexcept { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct LeafSchedule {
  NodeIndex leaf = 0;
  std::string leaf_id;
  Interval init, input, exec, output;
  /// Expected bytes per workflow request (probability and iterations folded in).
  double input_bytes = 0.0;
  double output_bytes = 0.0;
  double cpu_cores = 0.0;
  double reach = 0.0;

  double io_bytes() const noexcept { return input_bytes + output_bytes; }
  double busy_s() const noexcept { return output.end - init.start; }
};

/// Expected schedule of every leaf with colocated, zero-overhead composites.
class ExpectedTimeline {
 public:
  ExpectedTimeline() = default;
  ExpectedTimeline(std::string workflow_id, std::vector<LeafSchedule> entries);

  const std::string& workflow_id() const noexcept { return workflow_id_; }
  std::span<const LeafSchedule> entries() const noexcept { return entries_; }
  const LeafSchedule* find(std::string_view leaf_id) const;
  /// Throws UnknownLeaf.
  const LeafSchedule& at(std::string_view leaf_id) const;
  double makespan() const noexcept;

 private:
  std::string workflow_id_;
  std::vector<LeafSchedule> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Throws MissingProfile for leaves without a profile.
ExpectedTimeline align(const WorkflowDef& tree, const Profiles& profiles);

/// Probability that the subtree at `n` succeeds under the profiles' failure rates.
double success_probability(const WorkflowDef& tree, const Profiles& profiles, NodeIndex n);

struct IoInterval {
  double start = 0.0;
  double end = 0.0;
  std::size_t degree = 0;

  double length() const noexcept { return end - start; }
  bool operator==(const IoInterval&) const = default;
};

/// Maximal intervals of constant I/O concurrency over the subset's input and
/// output periods; zero-degree gaps are left out. Throws UnknownLeaf.
std::vector<IoInterval> io_intervals(const ExpectedTimeline& timeline, std::span<const std::string> leaf_subset);

/// Input and output periods of the given entries (empty ones dropped).
std::vector<Interval> io_periods(const LeafSchedule& entry);

}  // namespace beeflow

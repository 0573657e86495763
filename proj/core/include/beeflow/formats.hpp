#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beeflow/bt.hpp"
#include "beeflow/convert.hpp"
#include "beeflow/partition.hpp"
#include "beeflow/placement.hpp"
#include "beeflow/sim.hpp"
#include "beeflow/trace.hpp"

namespace beeflow {

/// Version written as the top-level "format" field of every JSON document.
inline constexpr int kFormatVersion = 1;

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Parse errors carry the file name and the parser's line/column.
nlohmann::json read_json_file(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& origin = "<input>");
/// Two-space indented, trailing newline. Throws IoError.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
std::string dump_json(const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

nlohmann::json to_json(const FunctionSpec& f);
FunctionSpec function_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BtNode& n);
BtNode node_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WorkflowDef& wf);
/// Throws ParseError on schema mismatches.
WorkflowDef workflow_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DagDef& d);
DagDef dag_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FsmDef& f);
FsmDef fsm_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FunctionProfile& p);
/// Fields absent from `j` keep the values of `base`.
FunctionProfile profile_from_json(const nlohmann::json& j, const FunctionProfile& base = default_profile());
nlohmann::json to_json(const Profiles& p);
Profiles profiles_from_json(const nlohmann::json& j);

/// Runtime defaults read from a config file.
struct Config {
  FunctionProfile default_profile = beeflow::default_profile();
  std::size_t payload_limit_bytes = Payload::kDefaultLimitBytes;
  std::size_t expand_cap = 4096;
};
Config config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);

/// A partition plus everything needed to place and simulate it.
struct PartitionFile {
  WorkflowDef tree;
  Profiles profiles;
  PartitionResult result;
  PartitionPolicy policy;
};
nlohmann::json to_json(const PartitionResult& r);
PartitionResult partition_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PartitionFile& f);
PartitionFile partition_file_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClusterSpec& c);
ClusterSpec cluster_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlacementPlan& p);
PlacementPlan plan_from_json(const nlohmann::json& j);

/// On-disk scenario: partition, plan and cluster files referenced by path,
/// relative to the scenario file.
struct ScenarioFile {
  std::vector<std::string> partitions;
  std::string plan;
  std::string cluster;
  SimMode mode = SimMode::Single;
  std::size_t requests_per_workflow = 1;
  std::uint64_t rng_seed = 0;
  double composite_overhead_s = 0.0;
  double jitter = 0.0;
};
nlohmann::json to_json(const ScenarioFile& s);
ScenarioFile scenario_file_from_json(const nlohmann::json& j);
/// Reads the scenario and every file it references.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace beeflow

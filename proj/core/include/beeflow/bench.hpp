#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "beeflow/bt.hpp"
#include "beeflow/bundled.hpp"
#include "beeflow/convert.hpp"
#include "beeflow/placement.hpp"
#include "beeflow/sim.hpp"

namespace beeflow::bench {

enum class Policy { ContentionAware, RoundRobin, Random, ColocateAll };

std::string_view to_string(Policy p) noexcept;
/// "contention-aware", "round-robin", "random", "colocate-all".
Policy parse_policy(std::string_view text);
const std::vector<Policy>& all_policies();

/// Timelines for a template's workflows, in order.
std::vector<ExpectedTimeline> timelines(const bundled::ScenarioTemplate& t);

PlacementPlan plan_for(const bundled::ScenarioTemplate& t, Policy policy, std::uint64_t seed = 0);
Scenario instantiate(const bundled::ScenarioTemplate& t, PlacementPlan plan);

struct ComparisonRow {
  std::string scenario;
  std::string policy;
  double median_latency_s = 0.0;
  double max_node_cost = 0.0;
  double total_cost = 0.0;
  /// max / min bytes sent per node; infinite when some node moved nothing.
  double tx_ratio = 1.0;
  std::int64_t total_tx_bytes = 0;
};

/// Bytes moved per cluster node over the whole run.
std::vector<std::pair<std::string, std::int64_t>> node_tx_totals(const SimReport& report);
double tx_ratio(const SimReport& report);

/// Place and simulate every (scenario, policy) pair with the template seeds.
std::vector<ComparisonRow> run_comparison(const std::vector<bundled::ScenarioTemplate>& scenarios,
                                          const std::vector<Policy>& policies = all_policies());
void write_comparison_csv(const std::vector<ComparisonRow>& rows, std::ostream& out);

/// Random workflow generators shared by the harness and the test suites.
struct TreeGenOptions {
  std::size_t min_nodes = 1;
  std::size_t max_nodes = 25;
  double synthetic_prob = 0.1;
  bool loops = true;
};
WorkflowDef random_tree(Rng& rng, const TreeGenOptions& opt = {}, std::string workflow_id = "rand");
/// Nodes v0..v(n-1) in a shuffled topological layout, each forward pair linked with `edge_prob`.
DagDef random_dag(Rng& rng, std::size_t max_nodes = 12, double edge_prob = 0.3);
FsmDef random_fsm(Rng& rng, std::size_t max_states = 8);
/// Non-default profiles with random timing and byte counts.
Profiles random_profiles(const WorkflowDef& tree, Rng& rng);

struct QualityResult {
  std::size_t instances = 0;
  /// contention-aware max node cost <= round-robin's
  std::size_t ca_not_worse = 0;
  double worst_ratio = 0.0;  // max over instances of ca / rr max node cost
  std::size_t overlap_instances = 0;
  /// instances with overlap where colocate-all's total did not strictly exceed
  /// both contention-aware and round-robin
  std::size_t colocate_not_largest = 0;
  /// instances with overlap where the random baseline matched colocate-all
  std::size_t random_ties = 0;
};

/// Seeded random placement instances; placement only, no simulation.
QualityResult placement_quality(std::size_t instances, std::uint64_t seed);

/// Scenarios of the "default" suite.
std::vector<bundled::ScenarioTemplate> default_suite();

/// Acceptance thresholds checked against harness results.
nlohmann::json verdict(const std::vector<ComparisonRow>& rows, const QualityResult& quality);

/// Writes comparison.csv and verdict.json below `out_dir`; returns the verdict.
/// Throws InvalidArgument for unknown suites.
nlohmann::json run_suite(std::string_view suite, const std::filesystem::path& out_dir);

}  // namespace beeflow::bench

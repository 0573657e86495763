#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "beeflow/bt.hpp"

namespace beeflow {

struct DagDef {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  /// Optional specs for the node functions; missing ones get `prototype` below.
  std::vector<FunctionSpec> functions;
};

/// Source/sink layering into Sequence[head, middle, tail]; the middle is the
/// parallel composition of the weakly connected residual components, each
/// converted recursively. Throws EmptyDag, CyclicInput or InvalidArgument.
WorkflowDef dag_to_bt(const DagDef& dag, std::string workflow_id = "dag", const FunctionSpec& prototype = {});

/// The recursive part of dag_to_bt without the function table.
BtNode dag_to_bt_node(const DagDef& dag);

struct FsmTransition {
  std::string state;
  std::string outcome;
  std::string next;  // a state id or "END"

  bool operator==(const FsmTransition&) const = default;
};

struct FsmDef {
  /// Prefix source for nested machines; ignored at the top level.
  std::string id;
  std::vector<std::string> states;
  std::string initial;
  /// state -> function id; states hosting nested machines have no entry
  std::map<std::string, std::string> body;
  std::vector<FsmTransition> transitions;
  /// For a nested machine: the parent state it runs in.
  std::string host;
  /// Machines run concurrently while their host state is active.
  std::vector<FsmDef> nested;
  std::vector<FunctionSpec> functions;

  bool operator==(const FsmDef&) const = default;
};

/// Structural problems, empty when the machine is convertible.
std::vector<std::string> check_fsm(const FsmDef& fsm);

/// Selector structure: LoopTillEnd(END) over Fallback[Sequence[guard, body, update]...].
/// Guard and update leaves are synthetic. Throws InvalidFsm.
WorkflowDef fsm_to_bt(const FsmDef& fsm, std::string workflow_id = "fsm", const FunctionSpec& prototype = {});

}  // namespace beeflow

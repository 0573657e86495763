#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beeflow {

/// Error categories raised by the library. Each maps to one failure mode of
/// an operation; the CLI turns `is_input_error()` codes into exit status 2.
enum class Errc {
  ParseError,
  InvalidArgument,
  UnknownNode,
  NotALeaf,
  UnknownLeaf,
  UnresolvedExecutor,
  AggUndefined,
  TailUndefined,
  PayloadLimitExceeded,
  CyclicInput,
  EmptyDag,
  InvalidFsm,
  TimestampOrderViolation,
  MissingProfile,
  EmptyTree,
  PolicyNotRegistered,
  NoFeasibleNode,
  UnplacedLeaf,
  InvalidScenario,
  IoError,
  StoreClosed,
  UnknownDataId,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Malformed input (bad JSON, schema or timestamp violations) rather than a
  /// domain failure on well-formed input.
  bool is_input_error() const noexcept;

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace beeflow

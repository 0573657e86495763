#include "beeflow/error.hpp"

namespace beeflow {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::NotALeaf: return "NotALeaf";
    case Errc::UnknownLeaf: return "UnknownLeaf";
    case Errc::UnresolvedExecutor: return "UnresolvedExecutor";
    case Errc::AggUndefined: return "AggUndefined";
    case Errc::TailUndefined: return "TailUndefined";
    case Errc::PayloadLimitExceeded: return "PayloadLimitExceeded";
    case Errc::CyclicInput: return "CyclicInput";
    case Errc::EmptyDag: return "EmptyDag";
    case Errc::InvalidFsm: return "InvalidFsm";
    case Errc::TimestampOrderViolation: return "TimestampOrderViolation";
    case Errc::MissingProfile: return "MissingProfile";
    case Errc::EmptyTree: return "EmptyTree";
    case Errc::PolicyNotRegistered: return "PolicyNotRegistered";
    case Errc::NoFeasibleNode: return "NoFeasibleNode";
    case Errc::UnplacedLeaf: return "UnplacedLeaf";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::IoError: return "IoError";
    case Errc::StoreClosed: return "StoreClosed";
    case Errc::UnknownDataId: return "UnknownDataId";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

bool Error::is_input_error() const noexcept {
  return code_ == Errc::ParseError || code_ == Errc::TimestampOrderViolation ||
         code_ == Errc::InvalidArgument || code_ == Errc::IoError;
}

}  // namespace beeflow

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json_fwd.hpp>

namespace beeflow {

/// Handle to an object held by a DataStore. Payloads carry these instead of
/// the object bytes.
struct DataId {
  std::string value;
  auto operator<=>(const DataId&) const = default;
};

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string, DataId>;

/// true for `true`, nonzero numbers, and nonempty strings or ids.
bool truthy(const Value& v) noexcept;

/// Small key-value map travelling with a workflow request.
class Payload {
 public:
  static constexpr std::string_view kSel = "SEL";
  static constexpr std::string_view kEnd = "END";
  static constexpr std::string_view kOutcome = "OUTCOME";
  static constexpr std::size_t kDefaultLimitBytes = std::size_t{1} << 20;

  Payload() = default;

  bool contains(std::string_view key) const;
  const Value* find(std::string_view key) const;
  void set(std::string key, Value v);
  void erase(std::string_view key);
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// String value of `key`, or empty when absent or not a string.
  std::string get_string(std::string_view key) const;

  const std::map<std::string, Value, std::less<>>& entries() const noexcept { return entries_; }

  bool operator==(const Payload&) const = default;

 private:
  std::map<std::string, Value, std::less<>> entries_;
};

nlohmann::json to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);

/// Length of the compact JSON encoding, which is what a broker would carry.
std::size_t serialized_size(const Payload& p);

}  // namespace beeflow

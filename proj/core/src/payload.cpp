#include "beeflow/payload.hpp"

#include <nlohmann/json.hpp>

#include "beeflow/error.hpp"

namespace beeflow {

namespace {
constexpr const char* kIdKey = "$id";

nlohmann::json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, DataId>) {
          return nlohmann::json{{kIdKey, x.value}};
        } else {
          return x;
        }
      },
      v);
}

Value value_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return std::monostate{};
    case nlohmann::json::value_t::boolean: return j.get<bool>();
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned: return j.get<std::int64_t>();
    case nlohmann::json::value_t::number_float: return j.get<double>();
    case nlohmann::json::value_t::string: return j.get<std::string>();
    case nlohmann::json::value_t::object:
      if (j.size() == 1 && j.contains(kIdKey) && j[kIdKey].is_string()) {
        return DataId{j[kIdKey].get<std::string>()};
      }
      break;
    default: break;
  }
  throw Error(Errc::ParseError, "payload values must be scalars or {\"$id\": ...}, got " + j.dump());
}
}  // namespace

bool truthy(const Value& v) noexcept {
  return std::visit(
      [](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return false;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::string>) {
          return !x.empty();
        } else if constexpr (std::is_same_v<T, DataId>) {
          return !x.value.empty();
        } else {
          return x != 0;
        }
      },
      v);
}

bool Payload::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const Value* Payload::find(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Payload::set(std::string key, Value v) { entries_.insert_or_assign(std::move(key), std::move(v)); }

void Payload::erase(std::string_view key) {
  auto it = entries_.find(key);
  if (it != entries_.end()) entries_.erase(it);
}

std::string Payload::get_string(std::string_view key) const {
  const Value* v = find(key);
  if (v == nullptr) return {};
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  return {};
}

nlohmann::json to_json(const Payload& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : p.entries()) j[k] = value_to_json(v);
  return j;
}

Payload payload_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "payload must be a JSON object");
  Payload p;
  for (const auto& [k, v] : j.items()) p.set(k, value_from_json(v));
  return p;
}

std::size_t serialized_size(const Payload& p) { return to_json(p).dump().size(); }

}  // namespace beeflow

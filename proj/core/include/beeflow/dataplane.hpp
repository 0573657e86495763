#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "beeflow/payload.hpp"

namespace beeflow {

struct StoreStats {
  std::size_t objects = 0;
  std::size_t bytes = 0;

  bool operator==(const StoreStats&) const = default;
};

/// Per-worker object store for application data. Handles are
/// "<node>/<counter>" and are only meaningful to the store that issued them.
/// Safe for concurrent put/get.
class DataStore {
 public:
  /// node defaults to "store<k>" with k unique in the process.
  explicit DataStore(std::string node = {});
  /// Also writes every object to `dir/<id>`.
  DataStore(std::string node, std::filesystem::path dir);

  DataStore(const DataStore&) = delete;
  DataStore& operator=(const DataStore&) = delete;

  /// Throws StoreClosed.
  DataId put(std::string_view bytes);
  /// Throws UnknownDataId.
  std::string get(const DataId& id) const;
  bool contains(const DataId& id) const;
  void close();
  bool closed() const;
  StoreStats stats() const;
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::string, std::less<>> objects_;
  std::size_t next_ = 0;
  std::size_t bytes_ = 0;
  bool closed_ = false;
};

struct PayloadCheck {
  bool ok = true;
  std::size_t size_bytes = 0;
  std::size_t limit_bytes = 0;
};

/// Compares the serialized payload size against the limit. Referenced
/// objects are not looked at.
PayloadCheck check_payload(const Payload& payload, std::size_t limit_bytes = Payload::kDefaultLimitBytes);

}  // namespace beeflow

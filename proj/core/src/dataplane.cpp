#include "beeflow/dataplane.hpp"

#include <fstream>

#include "beeflow/error.hpp"

namespace beeflow {

namespace {

std::string default_node_name() {
  static std::atomic<std::size_t> counter{0};
  return "store" + std::to_string(counter.fetch_add(1));
}

}  // namespace

DataStore::DataStore(std::string node) : node_(node.empty() ? default_node_name() : std::move(node)) {}

DataStore::DataStore(std::string node, std::filesystem::path dir) : DataStore(std::move(node)) {
  std::error_code ec;
  std::filesystem::create_directories(dir / node_, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + (dir / node_).string() + ": " + ec.message());
  dir_ = std::move(dir);
}

DataId DataStore::put(std::string_view bytes) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(Errc::StoreClosed, node_);
  std::string id = node_ + "/" + std::to_string(next_++);
  if (dir_) {
    const auto path = *dir_ / id;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  }
  bytes_ += bytes.size();
  objects_.emplace(id, std::string(bytes));
  return DataId{std::move(id)};
}

std::string DataStore::get(const DataId& id) const {
  std::lock_guard lock(mu_);
  auto it = objects_.find(id.value);
  if (it == objects_.end()) throw Error(Errc::UnknownDataId, id.value);
  return it->second;
}

bool DataStore::contains(const DataId& id) const {
  std::lock_guard lock(mu_);
  return objects_.find(id.value) != objects_.end();
}

void DataStore::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
}

bool DataStore::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

StoreStats DataStore::stats() const {
  std::lock_guard lock(mu_);
  return {objects_.size(), bytes_};
}

PayloadCheck check_payload(const Payload& payload, std::size_t limit_bytes) {
  const std::size_t size = serialized_size(payload);
  return {size <= limit_bytes, size, limit_bytes};
}

}  // namespace beeflow

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "beeflow/bt.hpp"
#include "beeflow/bundled.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("beeflow-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::vector<std::string> executed_leaves(const beeflow::WorkflowDef& wf, const beeflow::ExecutionLog& log) {
  std::vector<std::string> out;
  for (const auto& e : log.entries) {
    if (!e.skipped) out.push_back(wf.node(e.leaf).id);
  }
  return out;
}

/// Leaf function whose executor kind is `kind`.
inline beeflow::FunctionSpec fn(std::string id, std::string kind, nlohmann::json params = nlohmann::json::object()) {
  beeflow::FunctionSpec f;
  f.id = std::move(id);
  f.executor_kind = std::move(kind);
  f.params = std::move(params);
  return f;
}

}  // namespace testing_support

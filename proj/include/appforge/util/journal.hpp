#pragma once

#include <filesystem>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace appforge::util {

// Append-only NDJSON event log. Each record gets a monotonically increasing
// "seq" field. Records carry no wall-clock time so that replayed runs
// produce identical journals.
class Journal {
 public:
  explicit Journal(std::filesystem::path path);

  void append(const std::string& event, nlohmann::json fields = nlohmann::json::object());
  const std::filesystem::path& path() const { return path_; }

 private:
  std::mutex mu_;
  std::filesystem::path path_;
  std::size_t seq_ = 0;
};

}  // namespace appforge::util

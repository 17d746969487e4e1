#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace appforge::testing {

namespace fs = std::filesystem;

// tests/fixtures in the source tree.
fs::path fixture_dir();
// A template store under tests/fixtures/stores.
fs::path store_dir(const std::string& name);

// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "appforge-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// Live (non-zombie) processes descended from this one.
std::vector<int> live_descendants();
// Live processes whose working directory lies under `root`.
std::vector<int> processes_with_cwd_under(const fs::path& root);

// Sorted relative paths plus content of every file under root.
std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path& root);

}  // namespace appforge::testing

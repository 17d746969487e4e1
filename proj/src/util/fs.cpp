#include "appforge/util/fs.hpp"

#include "appforge/util/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

namespace appforge::util {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(fmt::format("short write to {}", path.string()));
}

void append_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(fmt::format("cannot append to {}", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_file(path, doc.dump(2) + "\n");
}

std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_symlink()) {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    out.push_back(fs::relative(it->path(), root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing |
                         fs::copy_options::copy_symlinks);
}

fs::path make_temp_dir(std::string_view prefix) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto candidate = fs::temp_directory_path() /
                           fmt::format("{}-{}-{}-{:08x}", prefix, ::getpid(), counter++, rd());
    std::error_code ec;
    if (fs::create_directory(candidate, ec)) return candidate;
  }
  throw Error("cannot create a temporary directory");
}

}  // namespace appforge::util

#include "appforge/util/journal.hpp"

namespace appforge::util {

Journal::Journal(std::filesystem::path path) : path_(std::move(path)) {}

void Journal::append(const std::string& event, nlohmann::json fields) {
  std::lock_guard lock(mu_);
  if (!fields.is_object()) fields = nlohmann::json{{"value", std::move(fields)}};
  fields["seq"] = seq_++;
  fields["event"] = event;
  append_file(path_, fields.dump() + "\n");
}

}  // namespace appforge::util

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::util {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
// Creates parent directories as needed.
void write_file(const fs::path& path, std::string_view content);
void append_file(const fs::path& path, std::string_view content);

nlohmann::json read_json(const fs::path& path);
// Pretty-printed (2-space indent, sorted keys) with a trailing newline.
void write_json(const fs::path& path, const nlohmann::json& doc);

// Regular files under root as '/'-separated relative paths, sorted.
// Symlinks are not followed.
std::vector<std::string> list_files(const fs::path& root);

void copy_tree(const fs::path& from, const fs::path& to);

// Fresh, uniquely named directory under the system temp dir.
fs::path make_temp_dir(std::string_view prefix);

}  // namespace appforge::util

#include "appforge/workspace/templates.hpp"

#include "appforge/util/fs.hpp"
#include "appforge/workspace/paths.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace appforge::workspace {

const std::vector<std::string>& default_filter_rules() {
  static const std::vector<std::string> rules = {
      "node_modules", "dist", "build", "out", ".next", "coverage", "__pycache__", ".*", "*.log",
  };
  return rules;
}

void TemplateDescriptor::validate() const {
  if (id.empty()) throw UsageError("template id is empty");
  if (launch_command.find_first_not_of(" \t\r\n") == std::string::npos)
    throw UsageError(fmt::format("template '{}' has no launch command", id));
  if (probe.path.empty() || probe.path.front() != '/')
    throw UsageError(fmt::format("template '{}': probe path must start with '/'", id));
  for (const auto& p : protected_files) {
    if (!normalize_relative_path(p)) throw UsageError(fmt::format("template '{}': bad protected path '{}'", id, p));
  }
}

nlohmann::json TemplateDescriptor::to_json() const {
  return {{"id", id},
          {"description", description},
          {"launch", launch_command},
          {"install", install_command},
          {"probe", {{"path", probe.path}, {"status", probe.expected_status}}},
          {"filters", filter_rules},
          {"protected", protected_files}};
}

TemplateDescriptor TemplateDescriptor::from_json(const nlohmann::json& j, std::filesystem::path source_dir) {
  TemplateDescriptor t;
  try {
    t.id = j.at("id").get<std::string>();
    t.description = j.value("description", "");
    t.launch_command = j.value("launch", "");
    t.install_command = j.value("install", "");
    if (j.contains("probe")) {
      t.probe.path = j["probe"].value("path", "/");
      t.probe.expected_status = j["probe"].value("status", 200);
    }
    t.filter_rules = j.value("filters", std::vector<std::string>{});
    t.protected_files = j.value("protected", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("template manifest: {}", e.what()));
  }
  for (const auto& rule : default_filter_rules()) {
    if (std::find(t.filter_rules.begin(), t.filter_rules.end(), rule) == t.filter_rules.end())
      t.filter_rules.push_back(rule);
  }
  for (auto& p : t.protected_files) {
    if (auto n = normalize_relative_path(p)) p = *n;
  }
  t.source_dir = std::move(source_dir);
  t.validate();
  return t;
}

TemplateStore::TemplateStore(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw UsageError(fmt::format("template store {} is not a directory", root.string()));
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kManifestName)) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    templates_.push_back(TemplateDescriptor::from_json(util::read_json(dir / kManifestName), dir));
  }
}

TemplateStore::TemplateStore(std::vector<TemplateDescriptor> templates) : templates_(std::move(templates)) {}

bool TemplateStore::contains(const std::string& id) const {
  return std::any_of(templates_.begin(), templates_.end(), [&](const auto& t) { return t.id == id; });
}

const TemplateDescriptor& TemplateStore::get(const std::string& id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return t;
  }
  throw TemplateNotFound(fmt::format("no template with id '{}' in the store", id));
}

}  // namespace appforge::workspace

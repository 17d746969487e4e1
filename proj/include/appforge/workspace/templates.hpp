#pragma once

#include "appforge/util/errors.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::workspace {

struct ReadinessProbe {
  std::string path = "/";
  int expected_status = 200;
};

// A starter project in the local template store. On disk each template is a
// directory holding `template.json` (the manifest) and the seed files.
//
//   {
//     "id": "static-site",
//     "description": "...",
//     "launch": "python3 -m http.server {port} --bind 127.0.0.1",
//     "install": "",                      // optional, run before launch
//     "probe": {"path": "/", "status": 200},
//     "filters": ["dist/**"],              // merged with the default rules
//     "protected": ["package-lock.json"]
//   }
//
// `{port}` in the launch command is replaced by the allocated port; the
// PORT environment variable carries it as well.
struct TemplateDescriptor {
  std::string id;
  std::string description;
  std::string launch_command;
  std::string install_command;
  ReadinessProbe probe;
  std::vector<std::string> filter_rules;
  std::vector<std::string> protected_files;
  std::filesystem::path source_dir;

  void validate() const;
  nlohmann::json to_json() const;
  // Applies default filter rules on top of the listed ones.
  static TemplateDescriptor from_json(const nlohmann::json& j, std::filesystem::path source_dir = {});
};

// Build artifacts, dependency folders and hidden entries.
const std::vector<std::string>& default_filter_rules();

inline constexpr const char* kManifestName = "template.json";

class TemplateNotFound : public Error {
 public:
  using Error::Error;
};

class TemplateStore {
 public:
  // Loads every immediate subdirectory that holds a manifest. Throws
  // UsageError on an unreadable store or an invalid manifest.
  explicit TemplateStore(const std::filesystem::path& root);
  explicit TemplateStore(std::vector<TemplateDescriptor> templates);

  const std::vector<TemplateDescriptor>& all() const { return templates_; }
  bool contains(const std::string& id) const;
  const TemplateDescriptor& get(const std::string& id) const;
  bool empty() const { return templates_.empty(); }

 private:
  std::vector<TemplateDescriptor> templates_;
};

}  // namespace appforge::workspace

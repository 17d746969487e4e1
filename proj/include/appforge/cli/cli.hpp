#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace appforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitProvider = 3;
inline constexpr int kExitInternal = 4;

inline constexpr const char* kManifestSchema = "appforge.manifest/1";

enum class RunStatus { running, done, failed };
std::string_view to_string(RunStatus s);

struct RunManifest {
  std::string run_id;
  nlohmann::json config;
  std::string testgen_mode;
  std::string started_at;
  std::string finished_at;
  RunStatus status = RunStatus::running;
  std::string error;

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& run_dir) const;
};

// Exit code for an exception: 2 usage/config, 3 provider or cassette,
// 4 anything else. Stage wrappers are classified by their cause.
int exit_code_for(std::exception_ptr e);
// One-line remediation advice for an exception, empty when there is none.
std::string remediation_hint(std::exception_ptr e);

// Template store used when neither a flag nor the config names one:
// $APPFORGE_TEMPLATES, else the templates shipped with the source tree.
std::filesystem::path default_template_store();

// Entry point. Progress events go to `out` as one JSON object per line;
// human-readable errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace appforge::cli

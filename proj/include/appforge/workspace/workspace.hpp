#pragma once

#include "appforge/util/errors.hpp"
#include "appforge/util/journal.hpp"
#include "appforge/workspace/diff.hpp"
#include "appforge/workspace/templates.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace appforge::workspace {

struct BufferedFile {
  std::string path;
  std::string content;
  std::size_t line_count = 0;
};

struct WorkspaceState {
  std::filesystem::path root;
  std::string template_id;
  std::map<std::string, std::string> file_index;  // relative path -> sha256 of content
  std::set<std::string> locked;
  std::vector<BufferedFile> context_buffer;
  std::string chat_summary;
};

enum class ActionKind { create, full_replace, diff };
std::string_view to_string(ActionKind k);

struct FileAction {
  ActionKind kind = ActionKind::full_replace;
  std::string path;
  std::string content;           // create / full_replace
  std::vector<DiffHunk> hunks;   // diff
};

enum class ApplyStatus { applied, locked_skipped, diff_context_mismatch, path_escape };
std::string_view to_string(ApplyStatus s);

struct ApplyResult {
  ApplyStatus status = ApplyStatus::applied;
  ActionKind kind = ActionKind::full_replace;  // effective kind
  std::string path;
  std::size_t bytes_written = 0;
  std::string message;
  std::vector<std::string> warnings;
};

class InvalidAction : public Error {
 public:
  using Error::Error;
};
class DestinationNotEmpty : public Error {
 public:
  using Error::Error;
};
class EmptyBuffer : public Error {
 public:
  EmptyBuffer() : Error("context buffer is empty") {}
};

// Directory (relative to the root) holding workspace metadata. It is never
// indexed, rendered, or writable through actions.
inline constexpr const char* kMetadataDir = ".appforge";

// Paths from `paths` that match none of `rules`, in sorted order.
std::vector<std::string> filter_paths(const std::vector<std::string>& paths, const std::vector<std::string>& rules);

// One <file filePath="..."> block with 1-based, right-aligned line numbers.
std::string render_file_block(const BufferedFile& file);

// The project tree a development agent works on. All mutations go through a
// single owner (not thread-safe); parallel readers work on snapshot copies.
class Workspace {
 public:
  // Copies the template's seed files into `dest` (which must be absent or
  // empty). Locked set = template protected list + `extra_locked`.
  static Workspace init_from_template(const TemplateDescriptor& tmpl, const std::filesystem::path& dest,
                                      const std::vector<std::string>& extra_locked = {});
  // Reopens a workspace previously created by init_from_template.
  static Workspace open(const std::filesystem::path& root);

  const WorkspaceState& state() const { return state_; }
  const TemplateDescriptor& descriptor() const { return descriptor_; }
  const std::filesystem::path& root() const { return state_.root; }

  std::vector<std::string> filter_files() const;

  // Never throws for per-file outcomes (lock, mismatch, escape); those are
  // reported in the result. Throws InvalidAction for a malformed action.
  ApplyResult apply_action(const FileAction& action);

  // Throws EmptyBuffer when nothing is loaded.
  std::string render_context() const;

  // Context buffer maintenance. load_file returns false for a path that is
  // not in the file index; loading an already-buffered path refreshes it.
  bool load_file(const std::string& path);
  void drop_file(const std::string& path);
  bool is_buffered(const std::string& path) const;

  void set_chat_summary(std::string summary);

  // SHA-256 over the sorted (path, content hash) index.
  std::string tree_hash() const;

  // Rebuilds the file index from disk.
  void rescan();
  void save() const;
  // Copies the working tree (metadata included) to `dest`.
  void snapshot_to(const std::filesystem::path& dest) const;

  void set_journal(std::shared_ptr<util::Journal> journal) { journal_ = std::move(journal); }

 private:
  Workspace() = default;
  std::optional<std::filesystem::path> resolve_inside(const std::string& rel) const;

  WorkspaceState state_;
  TemplateDescriptor descriptor_;
  std::shared_ptr<util::Journal> journal_;
};

}  // namespace appforge::workspace

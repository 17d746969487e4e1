#include "appforge/workspace/workspace.hpp"

#include "appforge/util/fs.hpp"
#include "appforge/util/hash.hpp"
#include "appforge/util/markup.hpp"
#include "appforge/util/text.hpp"
#include "appforge/workspace/paths.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace appforge::workspace {

namespace fs = std::filesystem;

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::create: return "create";
    case ActionKind::full_replace: return "full-replace";
    case ActionKind::diff: return "diff";
  }
  return "full-replace";
}

std::string_view to_string(ApplyStatus s) {
  switch (s) {
    case ApplyStatus::applied: return "applied";
    case ApplyStatus::locked_skipped: return "locked-skipped";
    case ApplyStatus::diff_context_mismatch: return "diff-context-mismatch";
    case ApplyStatus::path_escape: return "path-escape";
  }
  return "applied";
}

namespace {

constexpr const char* kStateFile = "state.json";
constexpr const char* kStateSchema = "appforge.workspace/1";

bool is_metadata(std::string_view rel) {
  return rel == kMetadataDir || rel.starts_with(std::string(kMetadataDir) + "/");
}

std::size_t count_lines(std::string_view content) { return util::split_lines(content).size(); }

}  // namespace

std::vector<std::string> filter_paths(const std::vector<std::string>& paths, const std::vector<std::string>& rules) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    const bool excluded = std::any_of(rules.begin(), rules.end(), [&](const auto& r) { return glob_match(r, p); });
    if (!excluded) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_file_block(const BufferedFile& file) {
  const auto lines = util::split_lines(file.content);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(lines.size()).size());
  std::string out = fmt::format("<file filePath=\"{}\">\n", util::escape_attribute(file.path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += fmt::format("{:>{}} {}\n", i + 1, width, lines[i]);
  }
  out += "</file>\n";
  return out;
}

Workspace Workspace::init_from_template(const TemplateDescriptor& tmpl, const fs::path& dest,
                                        const std::vector<std::string>& extra_locked) {
  if (tmpl.source_dir.empty() || !fs::is_directory(tmpl.source_dir))
    throw TemplateNotFound(fmt::format("template '{}' has no seed directory", tmpl.id));
  if (fs::exists(dest) && !fs::is_empty(dest))
    throw DestinationNotEmpty(fmt::format("{} already exists and is not empty", dest.string()));
  fs::create_directories(dest);

  for (const auto& rel : util::list_files(tmpl.source_dir)) {
    if (rel == kManifestName || is_metadata(rel)) continue;
    const auto target = dest / rel;
    fs::create_directories(target.parent_path());
    fs::copy_file(tmpl.source_dir / rel, target, fs::copy_options::overwrite_existing);
  }

  Workspace ws;
  ws.state_.root = fs::absolute(dest);
  ws.state_.template_id = tmpl.id;
  ws.descriptor_ = tmpl;
  for (const auto& p : tmpl.protected_files) ws.state_.locked.insert(p);
  for (const auto& p : extra_locked) {
    if (auto n = normalize_relative_path(p)) ws.state_.locked.insert(*n);
  }
  ws.rescan();
  ws.save();
  return ws;
}

Workspace Workspace::open(const fs::path& root) {
  const auto state_path = root / kMetadataDir / kStateFile;
  if (!fs::exists(state_path)) throw UsageError(fmt::format("{} is not a workspace (no {})", root.string(), state_path.string()));
  const auto doc = util::read_json(state_path);
  if (doc.value("schema", "") != kStateSchema)
    throw UsageError(fmt::format("{}: unsupported workspace schema '{}'", state_path.string(), doc.value("schema", "")));

  Workspace ws;
  ws.state_.root = fs::absolute(root);
  ws.descriptor_ = TemplateDescriptor::from_json(doc.at("template"), doc.value("template_dir", ""));
  ws.state_.template_id = ws.descriptor_.id;
  for (const auto& p : doc.value("locked", std::vector<std::string>{})) ws.state_.locked.insert(p);
  ws.state_.chat_summary = doc.value("chat_summary", "");
  ws.rescan();
  for (const auto& p : doc.value("buffer", std::vector<std::string>{})) ws.load_file(p);
  return ws;
}

void Workspace::save() const {
  nlohmann::json doc;
  doc["schema"] = kStateSchema;
  doc["template"] = descriptor_.to_json();
  doc["template_dir"] = descriptor_.source_dir.string();
  doc["locked"] = std::vector<std::string>(state_.locked.begin(), state_.locked.end());
  std::vector<std::string> buffer;
  for (const auto& f : state_.context_buffer) buffer.push_back(f.path);
  doc["buffer"] = buffer;
  doc["chat_summary"] = state_.chat_summary;
  util::write_json(state_.root / kMetadataDir / kStateFile, doc);
}

void Workspace::rescan() {
  state_.file_index.clear();
  for (const auto& rel : util::list_files(state_.root)) {
    if (is_metadata(rel)) continue;
    state_.file_index[rel] = util::sha256_hex(util::read_file(state_.root / rel));
  }
  std::erase_if(state_.context_buffer, [&](const auto& f) { return !state_.file_index.contains(f.path); });
}

std::vector<std::string> Workspace::filter_files() const {
  std::vector<std::string> paths;
  paths.reserve(state_.file_index.size());
  for (const auto& [p, _] : state_.file_index) paths.push_back(p);
  return filter_paths(paths, descriptor_.filter_rules);
}

std::optional<fs::path> Workspace::resolve_inside(const std::string& rel) const {
  const fs::path root = fs::weakly_canonical(state_.root);
  const fs::path target = fs::weakly_canonical(root / rel);
  auto r = root.begin();
  auto t = target.begin();
  for (; r != root.end(); ++r, ++t) {
    if (t == target.end() || *r != *t) return std::nullopt;
  }
  if (t == target.end()) return std::nullopt;  // the root itself
  return target;
}

ApplyResult Workspace::apply_action(const FileAction& action) {
  if (action.kind == ActionKind::diff && action.hunks.empty()) throw InvalidAction("diff action carries no hunks");

  ApplyResult result;
  result.kind = action.kind;
  result.path = action.path;

  auto finish = [&](ApplyResult r) {
    if (journal_) {
      journal_->append("apply", {{"path", r.path},
                                 {"kind", to_string(r.kind)},
                                 {"status", to_string(r.status)},
                                 {"bytes", r.bytes_written},
                                 {"message", r.message}});
    }
    return r;
  };

  const auto normalized = normalize_relative_path(action.path);
  if (!normalized || is_metadata(*normalized)) {
    result.status = ApplyStatus::path_escape;
    result.message = fmt::format("path '{}' is outside the workspace or reserved", action.path);
    return finish(result);
  }
  result.path = *normalized;
  if (state_.locked.contains(result.path)) {
    result.status = ApplyStatus::locked_skipped;
    result.message = fmt::format("'{}' is locked", result.path);
    return finish(result);
  }
  const auto target = resolve_inside(result.path);
  if (!target) {
    result.status = ApplyStatus::path_escape;
    result.message = fmt::format("path '{}' resolves outside the workspace", result.path);
    return finish(result);
  }

  const bool exists = fs::is_regular_file(*target);
  std::string content;
  if (action.kind == ActionKind::diff) {
    const std::string current = exists ? util::read_file(*target) : std::string();
    auto patched = apply_hunks(current, action.hunks);
    if (!patched.ok) {
      result.status = ApplyStatus::diff_context_mismatch;
      result.message = patched.error;
      return finish(result);
    }
    content = std::move(patched.content);
  } else {
    content = action.content;
    if (action.kind == ActionKind::create && exists) {
      result.kind = ActionKind::full_replace;
      result.warnings.push_back(fmt::format("create on existing '{}' treated as full replacement", result.path));
    } else if (action.kind == ActionKind::full_replace && !exists) {
      result.kind = ActionKind::create;
    }
  }

  util::write_file(*target, content);
  result.bytes_written = content.size();
  result.status = ApplyStatus::applied;
  state_.file_index[result.path] = util::sha256_hex(content);
  for (auto& f : state_.context_buffer) {
    if (f.path == result.path) {
      f.content = content;
      f.line_count = count_lines(content);
    }
  }
  save();
  return finish(result);
}

std::string Workspace::render_context() const {
  if (state_.context_buffer.empty()) throw EmptyBuffer();
  std::string out;
  for (const auto& f : state_.context_buffer) out += render_file_block(f);
  return out;
}

bool Workspace::load_file(const std::string& path) {
  const auto normalized = normalize_relative_path(path);
  if (!normalized || !state_.file_index.contains(*normalized)) return false;
  BufferedFile file;
  file.path = *normalized;
  file.content = util::read_file(state_.root / file.path);
  file.line_count = count_lines(file.content);
  for (auto& f : state_.context_buffer) {
    if (f.path == file.path) {
      f = std::move(file);
      return true;
    }
  }
  state_.context_buffer.push_back(std::move(file));
  return true;
}

void Workspace::drop_file(const std::string& path) {
  const auto normalized = normalize_relative_path(path);
  if (!normalized) return;
  std::erase_if(state_.context_buffer, [&](const auto& f) { return f.path == *normalized; });
}

bool Workspace::is_buffered(const std::string& path) const {
  return std::any_of(state_.context_buffer.begin(), state_.context_buffer.end(),
                     [&](const auto& f) { return f.path == path; });
}

void Workspace::set_chat_summary(std::string summary) { state_.chat_summary = std::move(summary); }

std::string Workspace::tree_hash() const {
  std::string manifest;
  for (const auto& [path, hash] : state_.file_index) {
    manifest += path;
    manifest.push_back('\0');
    manifest += hash;
    manifest.push_back('\n');
  }
  return util::sha256_hex(manifest);
}

void Workspace::snapshot_to(const fs::path& dest) const {
  if (fs::exists(dest) && !fs::is_empty(dest))
    throw DestinationNotEmpty(fmt::format("{} already exists and is not empty", dest.string()));
  util::copy_tree(state_.root, dest);
}

}  // namespace appforge::workspace

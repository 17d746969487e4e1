#include "appforge/devagent/actions.hpp"

#include "appforge/util/markup.hpp"
#include "appforge/util/text.hpp"
#include "appforge/workspace/clean.hpp"

#include <fmt/format.h>

namespace appforge::devagent {

std::string clean_payload(std::string_view body) {
  // The tag's own line break is not part of the file.
  if (body.starts_with("\r\n")) body.remove_prefix(2);
  else if (body.starts_with('\n')) body.remove_prefix(1);
  std::string text = workspace::clean_artifact_text(body);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ' || text.back() == '\t'))
    text.pop_back();
  if (!text.empty()) text.push_back('\n');
  return text;
}

ActionParse parse_actions(std::string_view reply) {
  ActionParse out;
  auto scan = util::scan_elements(reply, {"Action"});
  out.diagnostics = std::move(scan.diagnostics);
  for (const auto& el : scan.elements) {
    const auto* path = el.attribute("filepath");
    if (!path || util::trim(*path).empty()) {
      out.diagnostics.push_back(fmt::format("action at offset {} has no filePath", el.offset));
      continue;
    }
    if (el.self_closing) {
      out.diagnostics.push_back(fmt::format("action for {} has no content", *path));
      continue;
    }
    const auto* type_attr = el.attribute("type");
    const std::string type = type_attr ? util::to_lower(util::trim(*type_attr)) : "file";
    if (type != "file" && type != "create") {
      out.diagnostics.push_back(fmt::format("action for {} has unsupported type '{}'", *path, type));
      continue;
    }
    workspace::FileAction action;
    action.path = util::trim(*path);
    const auto* diff_attr = el.attribute("diff");
    const bool diff_mode = diff_attr && util::to_lower(util::trim(*diff_attr)) == "true";
    if (diff_mode) {
      auto parsed = workspace::parse_unified_diff(workspace::clean_artifact_text(el.body));
      if (auto* err = std::get_if<std::string>(&parsed)) {
        out.diagnostics.push_back(fmt::format("diff action for {}: {}", action.path, *err));
        continue;
      }
      action.kind = workspace::ActionKind::diff;
      action.hunks = std::move(std::get<std::vector<workspace::DiffHunk>>(parsed));
    } else {
      action.kind = type == "create" ? workspace::ActionKind::create : workspace::ActionKind::full_replace;
      action.content = clean_payload(el.body);
    }
    out.actions.push_back(std::move(action));
  }
  return out;
}

}  // namespace appforge::devagent

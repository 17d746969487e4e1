#include "appforge/devagent/selection.hpp"

#include "appforge/util/markup.hpp"
#include "appforge/util/text.hpp"
#include "appforge/workspace/paths.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace appforge::devagent {

SelectionParse parse_selection(std::string_view reply, const std::vector<std::string>& filtered) {
  SelectionParse out;
  const std::set<std::string> allowed(filtered.begin(), filtered.end());
  auto scan = util::scan_elements(reply, {"includeFile", "excludeFile"});
  out.warnings = std::move(scan.diagnostics);

  std::set<std::string> inc_seen;
  std::set<std::string> exc_seen;
  for (const auto& el : scan.elements) {
    std::string raw;
    if (const auto* p = el.attribute("path")) raw = *p;
    else if (const auto* fp = el.attribute("filepath")) raw = *fp;
    else raw = util::trim(el.body);
    const bool include = util::iequals(el.name, "includeFile");
    const auto path = workspace::normalize_relative_path(util::trim(raw));
    if (!path || !allowed.contains(*path)) {
      out.warnings.push_back(fmt::format("unknown path in selection: '{}' (dropped)", raw));
      continue;
    }
    if (include) {
      if (inc_seen.insert(*path).second) out.selection.included.push_back(*path);
    } else if (exc_seen.insert(*path).second) {
      out.selection.excluded.push_back(*path);
    }
  }
  auto& inc = out.selection.included;
  for (const auto& p : exc_seen) {
    if (inc_seen.contains(p)) out.warnings.push_back(fmt::format("'{}' both included and excluded; excluded", p));
  }
  std::erase_if(inc, [&](const std::string& p) { return exc_seen.contains(p); });
  return out;
}

void apply_selection(workspace::Workspace& ws, const ContextSelection& selection) {
  for (const auto& p : selection.included) ws.load_file(p);
  for (const auto& p : selection.excluded) ws.drop_file(p);
}

}  // namespace appforge::devagent

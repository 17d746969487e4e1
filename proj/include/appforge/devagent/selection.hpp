#pragma once

#include "appforge/workspace/workspace.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace appforge::devagent {

struct ContextSelection {
  std::vector<std::string> included;
  std::vector<std::string> excluded;
};

struct SelectionParse {
  ContextSelection selection;
  std::vector<std::string> warnings;
};

// Reads <includeFile path="..."/> and <excludeFile path="..."/> directives
// (a path in the tag body is accepted too). Paths outside `filtered` are
// dropped with an "unknown path in selection" warning. A path both included
// and excluded is excluded. Never throws.
SelectionParse parse_selection(std::string_view reply, const std::vector<std::string>& filtered);

// Buffer becomes (buffer ∪ included) ∖ excluded. New files are appended in
// selection order; files already loaded keep their position.
void apply_selection(workspace::Workspace& ws, const ContextSelection& selection);

}  // namespace appforge::devagent

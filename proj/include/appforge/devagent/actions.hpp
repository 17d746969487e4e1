#pragma once

#include "appforge/util/errors.hpp"
#include "appforge/workspace/workspace.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace appforge::devagent {

// Raised by callers when a reply yields zero usable actions.
class NoActionsFound : public Error {
 public:
  NoActionsFound() : Error("reply contains no well-formed file action") {}
};

struct ActionParse {
  std::vector<workspace::FileAction> actions;
  std::vector<std::string> diagnostics;
};

// Action grammar:
//   <Action type="file" filePath="rel/path">full content</Action>
//   <Action type="file" filePath="rel/path" diff="true">unified diff</Action>
//   <Action type="create" filePath="rel/path">content of a new file</Action>
// Payloads are cleaned of fences and HTML entities. Never throws; bad tags
// become diagnostics and well-formed siblings are kept.
ActionParse parse_actions(std::string_view reply);

// Body of a content action as written to disk.
std::string clean_payload(std::string_view body);

}  // namespace appforge::devagent

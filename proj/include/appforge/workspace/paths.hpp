#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace appforge::workspace {

// Normalizes a relative path supplied by a model or manifest: backslashes
// become '/', "." segments and duplicate separators are dropped, and ".."
// is resolved lexically. Returns nullopt for empty, absolute, drive-letter
// or NUL-containing paths and for anything that climbs above the root.
std::optional<std::string> normalize_relative_path(std::string_view path);

// Path glob used by template filter rules.
//  - `*` and `?` match within one segment; `**` as a whole segment matches
//    any number of segments (including none).
//  - A pattern without '/' is tested against every segment of the path, so
//    `node_modules` or `.*` exclude at any depth.
//  - A pattern with '/' is anchored at the root; it also matches everything
//    below a directory it matches, so `src/gen` covers `src/gen/a.js`.
bool glob_match(std::string_view pattern, std::string_view path);

}  // namespace appforge::workspace

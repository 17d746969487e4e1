#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace appforge::workspace {

enum class LineTag { context, add, remove };

struct DiffLine {
  LineTag tag;
  std::string text;
};

struct DiffHunk {
  int old_start = 0;
  int old_length = 0;
  int new_start = 0;
  int new_length = 0;
  std::vector<DiffLine> lines;

  // Empty when the line counts agree with the header.
  std::string check() const;
};

// Parses unified-diff hunks. File headers (---/+++, diff, index) are
// optional and ignored. Hunk extents are taken from the header counts; a
// blank line inside a hunk is read as an empty context line. Returns the
// hunks or an error message.
std::variant<std::vector<DiffHunk>, std::string> parse_unified_diff(std::string_view text);

// Renders hunks back to unified-diff text (no file headers).
std::string format_unified_diff(const std::vector<DiffHunk>& hunks);

struct PatchOutcome {
  bool ok = false;
  std::string content;  // patched content when ok
  std::string error;    // why it was rejected otherwise
};

// Applies hunks to `original` with exact context matching: every context and
// removed line must equal the file line at its position. Positions come from
// old_start; new_start is not consulted. Hunks must be ordered and
// non-overlapping. The original's trailing-newline state is kept (an empty
// file gains one when lines are added).
PatchOutcome apply_hunks(std::string_view original, const std::vector<DiffHunk>& hunks);

}  // namespace appforge::workspace

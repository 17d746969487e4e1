#include "appforge/workspace/diff.hpp"

#include "appforge/util/text.hpp"

#include <fmt/format.h>

#include <charconv>
#include <optional>

namespace appforge::workspace {

std::string DiffHunk::check() const {
  int old_count = 0;
  int new_count = 0;
  for (const auto& l : lines) {
    if (l.tag != LineTag::add) ++old_count;
    if (l.tag != LineTag::remove) ++new_count;
  }
  if (old_start < 0 || new_start < 0 || old_length < 0 || new_length < 0) return "negative hunk header value";
  if (old_count != old_length)
    return fmt::format("hunk @@ -{},{} has {} old-side lines", old_start, old_length, old_count);
  if (new_count != new_length)
    return fmt::format("hunk @@ +{},{} has {} new-side lines", new_start, new_length, new_count);
  if (lines.empty()) return "hunk has no lines";
  return {};
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// "-12,3" or "+4" (length defaults to 1).
bool parse_range(std::string_view token, char sign, int& start, int& length) {
  if (token.empty() || token.front() != sign) return false;
  token.remove_prefix(1);
  const auto comma = token.find(',');
  auto s = parse_int(token.substr(0, comma));
  if (!s) return false;
  start = *s;
  length = 1;
  if (comma != std::string_view::npos) {
    auto l = parse_int(token.substr(comma + 1));
    if (!l) return false;
    length = *l;
  }
  return true;
}

bool parse_header(std::string_view line, DiffHunk& h) {
  // @@ -a,b +c,d @@ optional section text
  if (line.substr(0, 3) != "@@ ") return false;
  const auto close = line.find(" @@", 3);
  if (close == std::string_view::npos) return false;
  const std::string_view ranges = line.substr(3, close - 3);
  const auto space = ranges.find(' ');
  if (space == std::string_view::npos) return false;
  return parse_range(ranges.substr(0, space), '-', h.old_start, h.old_length) &&
         parse_range(ranges.substr(space + 1), '+', h.new_start, h.new_length);
}

bool is_file_header(std::string_view line) {
  return line.starts_with("--- ") || line.starts_with("+++ ") || line.starts_with("diff ") ||
         line.starts_with("index ") || line == "---" || line == "+++";
}

}  // namespace

std::variant<std::vector<DiffHunk>, std::string> parse_unified_diff(std::string_view text) {
  const auto lines = util::split_lines(text);
  std::vector<DiffHunk> hunks;
  std::size_t i = 0;
  while (i < lines.size()) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty() || is_file_header(line)) {
      ++i;
      continue;
    }
    DiffHunk h;
    if (!parse_header(line, h)) return fmt::format("line {}: expected a hunk header, got '{}'", i + 1, line);
    ++i;
    int old_seen = 0;
    int new_seen = 0;
    while (old_seen < h.old_length || new_seen < h.new_length) {
      if (i >= lines.size()) return fmt::format("hunk @@ -{},{} is truncated", h.old_start, h.old_length);
      std::string_view body = lines[i];
      if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
      ++i;
      if (body.empty()) {
        h.lines.push_back({LineTag::context, ""});
        ++old_seen;
        ++new_seen;
        continue;
      }
      const char tag = body.front();
      const std::string rest(body.substr(1));
      if (tag == ' ') {
        h.lines.push_back({LineTag::context, rest});
        ++old_seen;
        ++new_seen;
      } else if (tag == '-') {
        h.lines.push_back({LineTag::remove, rest});
        ++old_seen;
      } else if (tag == '+') {
        h.lines.push_back({LineTag::add, rest});
        ++new_seen;
      } else if (tag == '\\') {
        continue;  // "\ No newline at end of file"
      } else {
        return fmt::format("line {}: unexpected hunk line '{}'", i, body);
      }
    }
    while (i < lines.size() && lines[i].starts_with("\\")) ++i;
    if (auto err = h.check(); !err.empty()) return err;
    if (!hunks.empty()) {
      const auto& prev = hunks.back();
      if (h.old_start <= prev.old_start) return "hunk old starts are not strictly increasing";
    }
    hunks.push_back(std::move(h));
  }
  if (hunks.empty()) return std::string("diff contains no hunks");
  return hunks;
}

std::string format_unified_diff(const std::vector<DiffHunk>& hunks) {
  std::string out;
  for (const auto& h : hunks) {
    out += fmt::format("@@ -{},{} +{},{} @@\n", h.old_start, h.old_length, h.new_start, h.new_length);
    for (const auto& l : h.lines) {
      out.push_back(l.tag == LineTag::context ? ' ' : l.tag == LineTag::add ? '+' : '-');
      out += l.text;
      out.push_back('\n');
    }
  }
  return out;
}

PatchOutcome apply_hunks(std::string_view original, const std::vector<DiffHunk>& hunks) {
  PatchOutcome out;
  if (hunks.empty()) {
    out.error = "no hunks";
    return out;
  }
  const auto old_lines = util::split_lines(original);
  const bool trailing_newline = original.empty() || original.back() == '\n';
  std::vector<std::string> result;
  std::size_t cursor = 0;

  for (std::size_t k = 0; k < hunks.size(); ++k) {
    const auto& h = hunks[k];
    if (auto err = h.check(); !err.empty()) {
      out.error = fmt::format("hunk {}: {}", k + 1, err);
      return out;
    }
    // A pure insertion "-n,0" goes after line n; otherwise old_start is 1-based.
    const std::size_t pos = h.old_length == 0 ? static_cast<std::size_t>(h.old_start)
                                              : static_cast<std::size_t>(std::max(h.old_start, 1) - 1);
    if (h.old_length > 0 && h.old_start < 1) {
      out.error = fmt::format("hunk {}: old start must be >= 1", k + 1);
      return out;
    }
    if (pos < cursor || pos > old_lines.size()) {
      out.error = fmt::format("hunk {}: position {} overlaps a previous hunk or is past the end", k + 1, h.old_start);
      return out;
    }
    result.insert(result.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(cursor),
                  old_lines.begin() + static_cast<std::ptrdiff_t>(pos));
    std::size_t p = pos;
    for (const auto& l : h.lines) {
      if (l.tag == LineTag::add) {
        result.push_back(l.text);
        continue;
      }
      if (p >= old_lines.size() || old_lines[p] != l.text) {
        out.error = fmt::format("hunk {}: line {} does not match context '{}'", k + 1, p + 1,
                                util::truncate(l.text, 80));
        return out;
      }
      if (l.tag == LineTag::context) result.push_back(l.text);
      ++p;
    }
    cursor = p;
  }
  result.insert(result.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(cursor), old_lines.end());

  out.content = util::join(result, "\n");
  if (!result.empty() && trailing_newline) out.content.push_back('\n');
  out.ok = true;
  return out;
}

}  // namespace appforge::workspace

#include "appforge/workspace/paths.hpp"

#include "appforge/util/text.hpp"

#include <vector>

namespace appforge::workspace {

namespace {

std::vector<std::string_view> split_segments(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t slash = path.find('/', start);
    const std::size_t end = slash == std::string_view::npos ? path.size() : slash;
    if (end > start) out.push_back(path.substr(start, end - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return out;
}

bool segment_match(std::string_view pat, std::string_view s) {
  // Iterative wildcard match with single-star backtracking.
  std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

// True when pattern segments [pi..] match a prefix of path segments [si..]
// that ends on a segment boundary.
bool match_prefix(const std::vector<std::string_view>& pat, std::size_t pi,
                  const std::vector<std::string_view>& path, std::size_t si) {
  if (pi == pat.size()) return true;
  if (pat[pi] == "**") {
    for (std::size_t k = si; k <= path.size(); ++k) {
      if (match_prefix(pat, pi + 1, path, k)) return true;
    }
    return false;
  }
  if (si == path.size()) return false;
  return segment_match(pat[pi], path[si]) && match_prefix(pat, pi + 1, path, si + 1);
}

}  // namespace

std::optional<std::string> normalize_relative_path(std::string_view raw) {
  std::string path = util::trim(raw);
  if (path.empty()) return std::nullopt;
  if (path.find('\0') != std::string::npos) return std::nullopt;
  for (char& c : path) {
    if (c == '\\') c = '/';
  }
  if (path.front() == '/' || path.front() == '~') return std::nullopt;
  if (path.size() >= 2 && path[1] == ':') return std::nullopt;

  std::vector<std::string_view> kept;
  for (auto seg : split_segments(path)) {
    if (seg == ".") continue;
    if (seg == "..") {
      if (kept.empty()) return std::nullopt;
      kept.pop_back();
      continue;
    }
    kept.push_back(seg);
  }
  if (kept.empty()) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out.push_back('/');
    out.append(kept[i]);
  }
  return out;
}

bool glob_match(std::string_view pattern, std::string_view path) {
  while (!pattern.empty() && pattern.front() == '/') pattern.remove_prefix(1);
  while (!pattern.empty() && pattern.back() == '/') pattern.remove_suffix(1);
  if (pattern.empty()) return false;
  const auto path_segs = split_segments(path);
  if (pattern.find('/') == std::string_view::npos && pattern != "**") {
    for (auto seg : path_segs) {
      if (segment_match(pattern, seg)) return true;
    }
    return false;
  }
  return match_prefix(split_segments(pattern), 0, path_segs, 0);
}

}  // namespace appforge::workspace

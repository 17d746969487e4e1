#include "appforge/workspace/clean.hpp"

#include <array>
#include <cctype>
#include <optional>
#include <utility>

namespace appforge::workspace {

namespace {

constexpr std::array<std::pair<std::string_view, char>, 5> kEntities{{
    {"&lt;", '<'},
    {"&gt;", '>'},
    {"&amp;", '&'},
    {"&quot;", '"'},
    {"&#39;", '\''},
}};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<std::string> strip_wrapping_fence(std::string_view text) {
  const std::string_view t = trim_view(text);
  std::size_t ticks = 0;
  while (ticks < t.size() && t[ticks] == '`') ++ticks;
  if (ticks < 3) return std::nullopt;

  const std::size_t first_nl = t.find('\n');
  if (first_nl == std::string_view::npos) return std::nullopt;
  // Info string (language tag) must not contain backticks.
  if (t.substr(ticks, first_nl - ticks).find('`') != std::string_view::npos) return std::nullopt;

  const std::size_t last_nl = t.rfind('\n');
  const std::string_view closing = trim_view(t.substr(last_nl + 1));
  if (closing.size() < ticks || closing.find_first_not_of('`') != std::string_view::npos) return std::nullopt;

  if (last_nl == first_nl) return std::string();
  std::string_view inner = t.substr(first_nl + 1, last_nl - first_nl - 1);
  if (!inner.empty() && inner.back() == '\r') inner.remove_suffix(1);
  return std::string(inner);
}

}  // namespace

std::string unescape_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '&') {
      bool matched = false;
      for (const auto& [entity, ch] : kEntities) {
        if (text.substr(i, entity.size()) == entity) {
          out.push_back(ch);
          i += entity.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string clean_artifact_text(std::string_view text) {
  std::string current(text);
  while (true) {
    std::string next = current;
    if (auto inner = strip_wrapping_fence(next)) next = std::move(*inner);
    next = unescape_entities(next);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace appforge::workspace

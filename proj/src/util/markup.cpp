#include "appforge/util/markup.hpp"

#include "appforge/util/text.hpp"

#include <cctype>
#include <fmt/format.h>

namespace appforge::util {

const std::string* Element::attribute(std::string_view key) const {
  auto it = attributes.find(to_lower(key));
  return it == attributes.end() ? nullptr : &it->second;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == ':' || c == '-' || c == '.';
}

// Returns the matched name when `text[pos]` starts `<name` followed by a
// delimiter, or an empty view otherwise.
std::string_view match_open(std::string_view text, std::size_t pos,
                            const std::vector<std::string_view>& names) {
  if (pos >= text.size() || text[pos] != '<') return {};
  for (auto name : names) {
    const std::size_t end = pos + 1 + name.size();
    if (end > text.size()) continue;
    if (!iequals(text.substr(pos + 1, name.size()), name)) continue;
    if (end == text.size()) return text.substr(pos + 1, name.size());
    const char next = text[end];
    if (is_space(next) || next == '>' || next == '/') return text.substr(pos + 1, name.size());
  }
  return {};
}

std::size_t find_open(std::string_view text, std::size_t from, const std::vector<std::string_view>& names,
                      std::string_view* matched) {
  for (std::size_t pos = text.find('<', from); pos != std::string_view::npos; pos = text.find('<', pos + 1)) {
    auto m = match_open(text, pos, names);
    if (!m.empty()) {
      if (matched) *matched = m;
      return pos;
    }
  }
  return std::string_view::npos;
}

// Finds `</name>` (case-insensitive, optional whitespace before '>').
// Returns the offset of '<' and sets `end` past the '>'.
std::size_t find_close(std::string_view text, std::size_t from, std::string_view name, std::size_t* end) {
  for (std::size_t pos = text.find("</", from); pos != std::string_view::npos; pos = text.find("</", pos + 2)) {
    const std::size_t name_end = pos + 2 + name.size();
    if (name_end > text.size()) return std::string_view::npos;
    if (!iequals(text.substr(pos + 2, name.size()), name)) continue;
    std::size_t q = name_end;
    while (q < text.size() && is_space(text[q])) ++q;
    if (q < text.size() && text[q] == '>') {
      *end = q + 1;
      return pos;
    }
  }
  return std::string_view::npos;
}

enum class StartTag { open, self_closing, malformed, unterminated };

// Parses attributes after the tag name. On success `pos` is past the '>'.
StartTag parse_start_tag(std::string_view text, std::size_t& pos, Element& el) {
  while (true) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) return StartTag::unterminated;
    if (text[pos] == '>') {
      ++pos;
      return StartTag::open;
    }
    if (text[pos] == '/') {
      if (pos + 1 < text.size() && text[pos + 1] == '>') {
        pos += 2;
        return StartTag::self_closing;
      }
      return pos + 1 >= text.size() ? StartTag::unterminated : StartTag::malformed;
    }
    if (!is_name_start(text[pos])) return StartTag::malformed;
    const std::size_t name_begin = pos;
    while (pos < text.size() && is_name_char(text[pos])) ++pos;
    std::string key = to_lower(text.substr(name_begin, pos - name_begin));
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) return StartTag::unterminated;
    if (text[pos] != '=') {
      el.attributes[std::move(key)] = "";
      continue;
    }
    ++pos;
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) return StartTag::unterminated;
    std::string value;
    if (text[pos] == '"' || text[pos] == '\'') {
      const char quote = text[pos];
      const std::size_t close = text.find(quote, pos + 1);
      if (close == std::string_view::npos) return StartTag::unterminated;
      value = std::string(text.substr(pos + 1, close - pos - 1));
      pos = close + 1;
    } else {
      const std::size_t begin = pos;
      while (pos < text.size() && !is_space(text[pos]) && text[pos] != '>' &&
             !(text[pos] == '/' && pos + 1 < text.size() && text[pos + 1] == '>'))
        ++pos;
      value = std::string(text.substr(begin, pos - begin));
    }
    el.attributes[std::move(key)] = std::move(value);
  }
}

}  // namespace

ScanResult scan_elements(std::string_view text, const std::vector<std::string_view>& names) {
  ScanResult result;
  std::size_t pos = 0;
  while (true) {
    std::string_view name;
    const std::size_t start = find_open(text, pos, names, &name);
    if (start == std::string_view::npos) break;

    Element el;
    el.name = std::string(name);
    el.offset = start;
    std::size_t cursor = start + 1 + name.size();
    const StartTag kind = parse_start_tag(text, cursor, el);

    if (kind == StartTag::unterminated) {
      result.diagnostics.push_back(fmt::format("<{}> at offset {}: start tag is not terminated", el.name, start));
      break;
    }
    if (kind == StartTag::malformed) {
      result.diagnostics.push_back(fmt::format("<{}> at offset {}: malformed attributes", el.name, start));
      pos = start + 1;
      continue;
    }
    if (kind == StartTag::self_closing) {
      el.self_closing = true;
      result.elements.push_back(std::move(el));
      pos = cursor;
      continue;
    }

    std::size_t close_end = 0;
    const std::size_t close = find_close(text, cursor, el.name, &close_end);
    const std::size_t next_open = find_open(text, cursor, names, nullptr);
    if (close == std::string_view::npos) {
      result.diagnostics.push_back(fmt::format("<{}> at offset {}: missing closing tag", el.name, start));
      if (next_open == std::string_view::npos) break;
      pos = next_open;
      continue;
    }
    if (next_open != std::string_view::npos && next_open < close) {
      result.diagnostics.push_back(
          fmt::format("<{}> at offset {}: another tag opens before this one is closed", el.name, start));
      pos = next_open;
      continue;
    }
    el.body = std::string(text.substr(cursor, close - cursor));
    result.elements.push_back(std::move(el));
    pos = close_end;
  }
  return result;
}

std::string escape_attribute(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace appforge::util

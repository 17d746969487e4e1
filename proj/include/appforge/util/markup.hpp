#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace appforge::util {

// A tag found by scan_elements. Attribute keys are lower-cased; values are
// raw (no entity decoding).
struct Element {
  std::string name;
  std::map<std::string, std::string> attributes;
  std::string body;
  bool self_closing = false;
  std::size_t offset = 0;

  const std::string* attribute(std::string_view key) const;
};

struct ScanResult {
  std::vector<Element> elements;
  std::vector<std::string> diagnostics;
};

// Tolerant scanner for XML-like tags embedded in free text (model replies).
// Only tags whose name matches one of `names` (case-insensitive) are
// considered; everything else is treated as opaque text. Never throws:
// unterminated or overlapping tags are reported as diagnostics and skipped,
// and well-formed siblings are still returned in document order.
ScanResult scan_elements(std::string_view text, const std::vector<std::string_view>& names);

// Escapes the five XML special characters for use in attribute values.
std::string escape_attribute(std::string_view value);

}  // namespace appforge::util

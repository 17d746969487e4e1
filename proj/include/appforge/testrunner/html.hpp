#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace appforge::testrunner {

// Minimal DOM for the text-mode driver. Tolerant of sloppy markup: stray
// end tags are ignored and unclosed elements are closed at end of input.
struct HtmlNode {
  std::string tag;  // lower-case; empty for text nodes
  std::map<std::string, std::string> attrs;
  std::string text;  // decoded, text nodes only
  std::vector<std::unique_ptr<HtmlNode>> children;
  HtmlNode* parent = nullptr;

  bool is_text() const { return tag.empty(); }
  const std::string* attr(const std::string& key) const;
  bool has_attr(const std::string& key) const { return attrs.contains(key); }
  // Concatenated descendant text, whitespace collapsed.
  std::string inner_text() const;
  // Nearest ancestor with the given tag, or null.
  HtmlNode* ancestor(const std::string& tag) const;
};

// Root is a synthetic "#document" element.
std::unique_ptr<HtmlNode> parse_html(std::string_view html);

// Decodes named (common subset) and numeric character references.
std::string decode_html_entities(std::string_view text);

// Pre-order traversal of element nodes.
void for_each_element(HtmlNode& root, const std::function<void(HtmlNode&)>& fn);

}  // namespace appforge::testrunner

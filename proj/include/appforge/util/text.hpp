#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace appforge::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Splits on '\n'. A trailing newline does not produce an empty final element,
// so "a\nb\n" and "a\nb" both give {"a", "b"}. "" gives {}.
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Cuts to at most max_chars bytes, appending a marker when shortened.
std::string truncate(std::string_view s, std::size_t max_chars);

// Substitutes {{name}} placeholders; unknown placeholders are left intact.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace appforge::util

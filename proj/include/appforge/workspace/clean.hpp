#pragma once

#include <string>
#include <string_view>

namespace appforge::workspace {

// Removes formatting artifacts from model-emitted file content: a Markdown
// code fence wrapping the whole payload is stripped, and the entities
// &lt; &gt; &amp; &quot; &#39; are unescaped. Both steps repeat until
// nothing changes, so the function is idempotent. Text with no wrapping
// fence and none of those entities is returned unchanged.
std::string clean_artifact_text(std::string_view text);

// One left-to-right pass over the five entities.
std::string unescape_entities(std::string_view text);

}  // namespace appforge::workspace

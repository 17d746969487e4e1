#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace appforge::util {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

inline constexpr const char* kPromptVersion = "v1";

// A template file holds the system text, a line "---- user ----", then the
// user-turn template.
struct PromptParts {
  std::string system;
  std::string user;
};
PromptParts split_prompt(const std::string& text);

// Prompt templates by name (file stem under prompts/v1). An override
// directory, when set, takes precedence for any file it contains, which is
// how alternative prompting strategies are swapped in.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  explicit PromptLibrary(std::filesystem::path override_dir);

  // Throws appforge::Error for an unknown name.
  std::string get(const std::string& name) const;
  PromptParts parts(const std::string& name) const { return split_prompt(get(name)); }

 private:
  std::optional<std::filesystem::path> override_dir_;
};

}  // namespace appforge::util

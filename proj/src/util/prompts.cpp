#include "appforge/util/prompts.hpp"

#include "appforge/util/errors.hpp"
#include "appforge/util/fs.hpp"

namespace appforge::util {

PromptParts split_prompt(const std::string& text) {
  static constexpr std::string_view kMarker = "\n---- user ----\n";
  const auto pos = text.find(kMarker);
  if (pos == std::string::npos) return {"", text};
  return {text.substr(0, pos), text.substr(pos + kMarker.size())};
}

PromptLibrary::PromptLibrary(std::filesystem::path override_dir) : override_dir_(std::move(override_dir)) {}

std::string PromptLibrary::get(const std::string& name) const {
  if (override_dir_) {
    const auto candidate = *override_dir_ / (name + ".txt");
    if (std::filesystem::exists(candidate)) return read_file(candidate);
  }
  const auto& prompts = detail::embedded_prompts();
  auto it = prompts.find(name);
  if (it == prompts.end()) throw Error("unknown prompt template: " + name);
  return it->second;
}

}  // namespace appforge::util

#include "appforge/gateway/types.hpp"

#include "appforge/util/hash.hpp"

#include <fmt/format.h>

#include <cstdlib>

namespace appforge::gateway {

std::string_view to_string(Grammar g) {
  switch (g) {
    case Grammar::free_text: return "free-text";
    case Grammar::json_array: return "json-array";
    case Grammar::json_object: return "json-object";
    case Grammar::xml_actions: return "xml-actions";
    case Grammar::xml_selection: return "xml-selection";
  }
  return "free-text";
}

Grammar grammar_from_string(std::string_view s) {
  for (auto g : {Grammar::free_text, Grammar::json_array, Grammar::json_object, Grammar::xml_actions,
                 Grammar::xml_selection}) {
    if (to_string(g) == s) return g;
  }
  throw UsageError(fmt::format("unknown reply grammar '{}'", s));
}

PromptBundle& PromptBundle::add_text(std::string text) {
  turns.emplace_back(std::move(text));
  return *this;
}

PromptBundle& PromptBundle::add_image(ImageAttachment image) {
  turns.emplace_back(std::move(image));
  return *this;
}

std::string PromptBundle::user_text() const {
  std::string out;
  for (const auto& turn : turns) {
    if (const auto* text = std::get_if<std::string>(&turn)) {
      if (!out.empty()) out += "\n\n";
      out += *text;
    }
  }
  return out;
}

void PromptBundle::validate() const {
  if (turns.empty()) throw UsageError("prompt bundle has no user turn");
  for (const auto& turn : turns) {
    if (const auto* image = std::get_if<ImageAttachment>(&turn)) {
      const auto& f = image->format;
      if (f != "png" && f != "jpeg" && f != "webp" && f != "gif")
        throw UsageError(fmt::format("image attachment has unsupported format '{}'", f));
    }
  }
}

nlohmann::json PromptBundle::canonical() const {
  nlohmann::json doc;
  doc["system"] = system;
  doc["grammar"] = std::string(to_string(grammar));
  auto& list = doc["turns"] = nlohmann::json::array();
  for (const auto& turn : turns) {
    if (const auto* text = std::get_if<std::string>(&turn)) {
      list.push_back({{"type", "text"}, {"text", *text}});
    } else {
      const auto& image = std::get<ImageAttachment>(turn);
      list.push_back({{"type", "image"}, {"format", image.format}, {"data", util::base64_encode(image.bytes)}});
    }
  }
  return doc;
}

std::string PromptBundle::fingerprint() const { return util::sha256_hex(canonical().dump()); }

void ProviderConfig::validate() const {
  if (temperature != 0.0) throw UsageError("provider temperature must be 0");
  if (timeout.count() <= 0) throw UsageError("provider timeout must be positive");
  if (max_reasks < 0) throw UsageError("max re-asks must be >= 0");
  if (transport_retries < 0) throw UsageError("transport retries must be >= 0");
  if (max_output_tokens <= 0) throw UsageError("max output tokens must be positive");
  if (profile != "openai-chat" && profile != "anthropic-messages")
    throw UsageError(fmt::format("unknown provider profile '{}'", profile));
}

ProviderConfig ProviderConfig::from_json(const nlohmann::json& doc) {
  ProviderConfig cfg;
  const auto& p = doc.contains("provider") ? doc.at("provider") : doc;
  if (!p.is_object()) throw UsageError("provider config must be an object");
  cfg.endpoint = p.value("endpoint", cfg.endpoint);
  cfg.model = p.value("model", cfg.model);
  cfg.temperature = p.value("temperature", cfg.temperature);
  cfg.max_output_tokens = p.value("max_output_tokens", cfg.max_output_tokens);
  cfg.timeout = std::chrono::milliseconds(p.value("timeout_ms", static_cast<std::int64_t>(cfg.timeout.count())));
  cfg.max_reasks = p.value("max_reasks", cfg.max_reasks);
  cfg.transport_retries = p.value("transport_retries", cfg.transport_retries);
  cfg.profile = p.value("profile", cfg.profile);
  cfg.api_key = p.value("api_key", cfg.api_key);
  return cfg;
}

void ProviderConfig::apply_environment() {
  if (const char* v = std::getenv("APPFORGE_ENDPOINT"); v && *v) endpoint = v;
  if (const char* v = std::getenv("APPFORGE_MODEL"); v && *v) model = v;
  if (const char* v = std::getenv("APPFORGE_API_KEY"); v && *v) api_key = v;
}

nlohmann::json ProviderConfig::to_json() const {
  return {{"endpoint", endpoint},
          {"model", model},
          {"temperature", temperature},
          {"max_output_tokens", max_output_tokens},
          {"timeout_ms", timeout.count()},
          {"max_reasks", max_reasks},
          {"transport_retries", transport_retries},
          {"profile", profile}};
}

CassetteMiss::CassetteMiss(std::string fingerprint)
    : Error("cassette has no recorded reply for request " + fingerprint), fingerprint_(std::move(fingerprint)) {}

MalformedAfterRetries::MalformedAfterRetries(Grammar grammar, std::vector<std::string> attempts,
                                             std::string last_error)
    : Error(fmt::format("reply did not match grammar {} after {} attempt(s): {}", to_string(grammar),
                        attempts.size(), last_error)),
      grammar_(grammar),
      attempts_(std::move(attempts)) {}

}  // namespace appforge::gateway

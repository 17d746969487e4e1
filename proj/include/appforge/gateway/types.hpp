#pragma once

#include "appforge/util/errors.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::gateway {

// The reply shape a prompt asks for. json_object is used for single-record
// stages (elaboration, per-requirement test cases, driver decisions).
enum class Grammar { free_text, json_array, json_object, xml_actions, xml_selection };

std::string_view to_string(Grammar g);
Grammar grammar_from_string(std::string_view s);

struct ImageAttachment {
  std::string format;  // "png", "jpeg", "webp", "gif"
  std::vector<std::uint8_t> bytes;
};

using UserTurn = std::variant<std::string, ImageAttachment>;

struct PromptBundle {
  std::string system;
  std::vector<UserTurn> turns;
  Grammar grammar = Grammar::free_text;

  PromptBundle& add_text(std::string text);
  PromptBundle& add_image(ImageAttachment image);

  // Concatenation of all text turns, separated by blank lines.
  std::string user_text() const;

  // Throws UsageError when there is no user turn or an image has an
  // undeclared/unsupported format.
  void validate() const;

  // Canonical form: JSON with sorted keys, image bytes base64-encoded.
  nlohmann::json canonical() const;
  // SHA-256 of canonical().dump().
  std::string fingerprint() const;
};

struct TokenUsage {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct ModelReply {
  std::string raw;
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
};

struct ProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4.1";
  double temperature = 0.0;
  int max_output_tokens = 16384;
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
  int max_reasks = 2;
  int transport_retries = 2;
  std::string api_key;
  // Wire profile. "openai-chat": chat-completions body, images as base64
  // data URLs. "anthropic-messages": messages body, images as base64 sources.
  std::string profile = "openai-chat";

  void validate() const;

  // Reads the "provider" section of a config document.
  static ProviderConfig from_json(const nlohmann::json& doc);
  // Overrides from APPFORGE_ENDPOINT / APPFORGE_MODEL / APPFORGE_API_KEY.
  void apply_environment();
  // Serialized without the credential.
  nlohmann::json to_json() const;
};

class ProviderUnreachable : public Error {
 public:
  using Error::Error;
};

class CassetteMiss : public Error {
 public:
  explicit CassetteMiss(std::string fingerprint);
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

class MalformedAfterRetries : public Error {
 public:
  MalformedAfterRetries(Grammar grammar, std::vector<std::string> attempts, std::string last_error);
  const std::vector<std::string>& attempts() const { return attempts_; }
  Grammar grammar() const { return grammar_; }

 private:
  Grammar grammar_;
  std::vector<std::string> attempts_;
};

}  // namespace appforge::gateway

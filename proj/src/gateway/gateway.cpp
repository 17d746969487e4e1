#include "appforge/gateway/gateway.hpp"

#include "appforge/util/markup.hpp"
#include "appforge/util/text.hpp"
#include "appforge/workspace/clean.hpp"

#include <fmt/format.h>

#include <thread>

namespace appforge::gateway {

Gateway::Gateway(std::unique_ptr<Provider> provider, CassetteMode mode,
                 std::optional<std::filesystem::path> cassette_path)
    : provider_(std::move(provider)), mode_(mode) {
  if (mode_ == CassetteMode::replay) {
    if (!cassette_path) throw UsageError("replay mode needs a cassette file");
    cassette_.load(*cassette_path);
  } else {
    if (!provider_) throw UsageError(fmt::format("{} mode needs a provider", to_string(mode_)));
    if (mode_ == CassetteMode::record && cassette_path) cassette_.attach_file(*cassette_path);
  }
}

std::unique_ptr<Gateway> Gateway::replay_only(const std::filesystem::path& cassette_path) {
  return std::make_unique<Gateway>(nullptr, CassetteMode::replay, cassette_path);
}

ModelReply Gateway::call_provider(const PromptBundle& bundle, const ProviderConfig& config) {
  std::string last_error;
  for (int attempt = 0; attempt <= config.transport_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 << std::min(attempt, 5)));
    try {
      ++provider_calls_;
      return provider_->send(bundle, config);
    } catch (const TransportError& e) {
      last_error = e.what();
      if (!e.retryable()) break;
    }
  }
  throw ProviderUnreachable(last_error);
}

ModelReply Gateway::complete(const PromptBundle& bundle, const ProviderConfig& config) {
  config.validate();
  bundle.validate();
  const std::string fp = bundle.fingerprint();
  if (mode_ == CassetteMode::replay) {
    if (auto hit = cassette_.next(fp)) return *hit;
    throw CassetteMiss(fp);
  }
  ModelReply reply = call_provider(bundle, config);
  if (mode_ == CassetteMode::record) cassette_.append(fp, reply);
  return reply;
}

namespace {

std::optional<nlohmann::json> parse_json_lenient(const std::string& cleaned, char open, char close) {
  auto doc = nlohmann::json::parse(cleaned, nullptr, false);
  if (!doc.is_discarded()) return doc;
  // Prose around the payload: take the outermost bracketed span.
  const auto b = cleaned.find(open);
  const auto e = cleaned.rfind(close);
  if (b == std::string::npos || e == std::string::npos || e <= b) return std::nullopt;
  doc = nlohmann::json::parse(cleaned.substr(b, e - b + 1), nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

}  // namespace

std::optional<std::string> check_grammar(const std::string& raw, Grammar grammar, ParsedDocument& out) {
  out.grammar = grammar;
  switch (grammar) {
    case Grammar::free_text:
      out.text = raw;
      return std::nullopt;
    case Grammar::json_array:
    case Grammar::json_object: {
      const bool array = grammar == Grammar::json_array;
      out.text = workspace::clean_artifact_text(raw);
      auto doc = parse_json_lenient(out.text, array ? '[' : '{', array ? ']' : '}');
      if (!doc) return std::string("reply is not valid JSON");
      if (array && !doc->is_array()) return std::string("reply is JSON but not an array");
      if (!array && !doc->is_object()) return std::string("reply is JSON but not an object");
      out.json = std::move(*doc);
      return std::nullopt;
    }
    case Grammar::xml_actions: {
      out.text = raw;
      auto scan = util::scan_elements(raw, {"Action"});
      for (const auto& el : scan.elements) {
        if (el.attribute("filepath")) return std::nullopt;
      }
      return std::string("reply contains no complete <Action type=\"file\" filePath=\"...\"> tag");
    }
    case Grammar::xml_selection: {
      out.text = raw;
      auto scan = util::scan_elements(raw, {"contextSelection", "includeFile", "excludeFile"});
      if (!scan.elements.empty()) return std::nullopt;
      return std::string("reply contains no <contextSelection>, <includeFile> or <excludeFile> tag");
    }
  }
  return std::string("unknown grammar");
}

std::string corrective_instruction(Grammar grammar, const std::string& error) {
  return fmt::format(
      "Your previous reply could not be processed: {}. Reply again using only the required {} format "
      "described above, with no commentary before or after it.",
      error, to_string(grammar));
}

ParsedDocument Gateway::complete_structured(const PromptBundle& bundle, const ProviderConfig& config,
                                            const Validator& validator) {
  std::vector<std::string> attempts;
  std::string last_error;
  PromptBundle current = bundle;
  for (int attempt = 0; attempt <= config.max_reasks; ++attempt) {
    if (attempt > 0) {
      current = bundle;
      current.add_text(corrective_instruction(bundle.grammar, last_error));
    }
    ModelReply reply = complete(current, config);
    attempts.push_back(reply.raw);
    ParsedDocument doc;
    auto error = check_grammar(reply.raw, bundle.grammar, doc);
    if (!error && validator) error = validator(doc);
    if (!error) {
      doc.attempts = attempts;
      return doc;
    }
    last_error = *error;
  }
  throw MalformedAfterRetries(bundle.grammar, std::move(attempts), last_error);
}

}  // namespace appforge::gateway

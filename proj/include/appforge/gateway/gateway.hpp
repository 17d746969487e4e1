#pragma once

#include "appforge/gateway/cassette.hpp"
#include "appforge/gateway/provider.hpp"
#include "appforge/gateway/types.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

namespace appforge::gateway {

// A reply that passed its grammar check.
struct ParsedDocument {
  Grammar grammar = Grammar::free_text;
  // Raw reply for XML grammars; artifact-cleaned text for JSON grammars.
  std::string text;
  // Parsed value for JSON grammars, null otherwise.
  nlohmann::json json;
  // Every raw reply received, the accepted one last.
  std::vector<std::string> attempts;
};

// Caller-supplied check run after the grammar check. Returns an error
// description to trigger a re-ask, or nullopt to accept.
using Validator = std::function<std::optional<std::string>(const ParsedDocument&)>;

// Every model interaction goes through here. Safe to share between threads.
class Gateway {
 public:
  // `provider` may be null only in replay mode. In record mode the cassette
  // path (if any) is appended to; in replay mode it is loaded.
  Gateway(std::unique_ptr<Provider> provider, CassetteMode mode,
          std::optional<std::filesystem::path> cassette_path = std::nullopt);

  // Replay from a file with no provider at all: any miss is a CassetteMiss
  // and no network access can happen.
  static std::unique_ptr<Gateway> replay_only(const std::filesystem::path& cassette_path);

  ModelReply complete(const PromptBundle& bundle, const ProviderConfig& config);

  // Completes and checks the reply against bundle.grammar (plus `validator`),
  // re-asking with a corrective instruction up to config.max_reasks times.
  ParsedDocument complete_structured(const PromptBundle& bundle, const ProviderConfig& config,
                                     const Validator& validator = {});

  CassetteMode mode() const { return mode_; }
  // Exchanges that reached the provider (never counts replayed replies).
  std::size_t provider_calls() const { return provider_calls_.load(); }
  const Cassette& cassette() const { return cassette_; }

 private:
  ModelReply call_provider(const PromptBundle& bundle, const ProviderConfig& config);

  std::unique_ptr<Provider> provider_;
  CassetteMode mode_;
  Cassette cassette_;
  std::atomic<std::size_t> provider_calls_{0};
};

// Grammar check alone; returns the error description on failure.
std::optional<std::string> check_grammar(const std::string& raw, Grammar grammar, ParsedDocument& out);

// The fixed corrective instruction appended on a re-ask.
std::string corrective_instruction(Grammar grammar, const std::string& error);

}  // namespace appforge::gateway

#pragma once

#include "appforge/gateway/types.hpp"

namespace appforge::gateway {

// Raised by providers for a failed exchange. `retryable` marks failures
// worth another attempt (connection errors, 429, 5xx).
class TransportError : public Error {
 public:
  TransportError(std::string what, bool retryable) : Error(std::move(what)), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  // One request/response exchange. Throws TransportError.
  virtual ModelReply send(const PromptBundle& bundle, const ProviderConfig& config) = 0;
};

// HTTP chat-completion endpoint; body layout chosen by config.profile.
class HttpChatProvider final : public Provider {
 public:
  ModelReply send(const PromptBundle& bundle, const ProviderConfig& config) override;

  // Exposed for tests.
  static nlohmann::json build_request(const PromptBundle& bundle, const ProviderConfig& config);
  static ModelReply parse_response(const nlohmann::json& body, const ProviderConfig& config);
};

}  // namespace appforge::gateway

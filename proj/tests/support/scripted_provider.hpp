#pragma once

#include "appforge/gateway/gateway.hpp"

#include <functional>
#include <memory>
#include <mutex>

namespace appforge::testing {

// Everything a scripted provider was asked, shared with the test.
struct ProviderLog {
  mutable std::mutex mu;
  std::vector<gateway::PromptBundle> bundles;

  std::size_t size() const;
  gateway::PromptBundle at(std::size_t i) const;
};

// Answers from a function of the prompt; no network.
class ScriptedProvider final : public gateway::Provider {
 public:
  using Handler = std::function<std::string(const gateway::PromptBundle&)>;

  ScriptedProvider(Handler handler, std::shared_ptr<ProviderLog> log = nullptr);

  // Replies in order; the last one repeats once the list runs out.
  static std::unique_ptr<ScriptedProvider> sequence(std::vector<std::string> replies,
                                                    std::shared_ptr<ProviderLog> log = nullptr);

  gateway::ModelReply send(const gateway::PromptBundle& bundle, const gateway::ProviderConfig& config) override;

 private:
  Handler handler_;
  std::shared_ptr<ProviderLog> log_;
};

// Passthrough gateway over a scripted handler.
std::unique_ptr<gateway::Gateway> scripted_gateway(ScriptedProvider::Handler handler,
                                                   std::shared_ptr<ProviderLog> log = nullptr);
std::unique_ptr<gateway::Gateway> sequence_gateway(std::vector<std::string> replies,
                                                   std::shared_ptr<ProviderLog> log = nullptr);

// Config accepted by validate() without credentials.
gateway::ProviderConfig test_provider_config();

}  // namespace appforge::testing

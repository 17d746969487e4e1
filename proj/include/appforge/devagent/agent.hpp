#pragma once

#include "appforge/devagent/actions.hpp"
#include "appforge/devagent/selection.hpp"
#include "appforge/gateway/gateway.hpp"
#include "appforge/testgen/types.hpp"
#include "appforge/util/journal.hpp"
#include "appforge/util/prompts.hpp"
#include "appforge/workspace/templates.hpp"
#include "appforge/workspace/workspace.hpp"

#include <memory>

namespace appforge::devagent {

// Canonical chat-summary text before the first step.
inline constexpr const char* kNoHistory = "No prior history.";

struct DevTask {
  // Requirement list on round 0, rendered feedback afterwards.
  std::string instruction;
  int round = 0;
  std::optional<gateway::ImageAttachment> design_image;

  void validate() const;
};

struct StepSummary {
  int round = 0;
  std::vector<workspace::ApplyResult> results;
  // Actions the workspace refused as malformed.
  std::vector<std::string> rejected;
  std::vector<std::string> diagnostics;
  std::vector<std::string> warnings;
  bool productive = false;

  std::size_t applied_count() const;
  std::size_t skipped_count() const;
  nlohmann::json to_json() const;
};

struct TemplateChoice {
  const workspace::TemplateDescriptor* descriptor = nullptr;
  bool model_called = false;
  std::vector<std::string> warnings;
};

struct DevAgentOptions {
  // Used when classification names no template in the store.
  std::string fallback_template = "static-site";
  // Upper bound on the chat summary, in bytes; older text is cut first.
  std::size_t summary_budget = 4000;
};

class DevAgent {
 public:
  DevAgent(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts = {},
           DevAgentOptions options = {});

  void set_journal(std::shared_ptr<util::Journal> journal) { journal_ = std::move(journal); }

  // Throws UsageError for an empty store.
  TemplateChoice select_template(const testgen::UserRequest& request, const workspace::TemplateStore& store);

  // Asks the model which files matter and updates the buffer in place.
  ContextSelection select_context(workspace::Workspace& ws, const DevTask& task,
                                  std::vector<std::string>* warnings = nullptr);

  // Throws workspace::EmptyBuffer when nothing is loaded.
  gateway::PromptBundle build_dev_prompt(const workspace::Workspace& ws, const DevTask& task) const;

  // select_context, develop prompt, completion, parse and apply. Only
  // gateway failures (unreachable provider, cassette miss) escape.
  StepSummary develop_step(workspace::Workspace& ws, const DevTask& task);

 private:
  gateway::Gateway& gateway_;
  gateway::ProviderConfig config_;
  util::PromptLibrary prompts_;
  DevAgentOptions options_;
  std::shared_ptr<util::Journal> journal_;
};

// Picks a template id out of a free-text reply: an exact (trimmed,
// case-insensitive) match first, then the longest id contained in the reply.
std::optional<std::string> match_template_id(std::string_view reply, const std::vector<std::string>& ids);

// Appends `digest` as a new paragraph and cuts whole paragraphs (or, for a
// single oversized one, leading bytes) from the front to fit `budget`.
std::string append_digest(std::string_view summary, std::string_view digest, std::size_t budget);

// One-paragraph description of a finished step.
std::string step_digest(const DevTask& task, const StepSummary& summary);

}  // namespace appforge::devagent

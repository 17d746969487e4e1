#include "appforge/devagent/agent.hpp"

#include "appforge/util/text.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace appforge::devagent {

void DevTask::validate() const {
  if (util::trim(instruction).empty()) throw UsageError("development task has no instruction");
  if (round < 0) throw UsageError("development task round must be >= 0");
}

std::size_t StepSummary::applied_count() const {
  return std::count_if(results.begin(), results.end(),
                       [](const auto& r) { return r.status == workspace::ApplyStatus::applied; });
}

std::size_t StepSummary::skipped_count() const { return results.size() - applied_count(); }

nlohmann::json StepSummary::to_json() const {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json a{{"path", r.path}, {"kind", workspace::to_string(r.kind)}, {"status", workspace::to_string(r.status)}};
    if (!r.message.empty()) a["message"] = r.message;
    if (!r.warnings.empty()) a["warnings"] = r.warnings;
    actions.push_back(std::move(a));
  }
  return {{"round", round},     {"productive", productive}, {"actions", actions},
          {"rejected", rejected}, {"diagnostics", diagnostics}, {"warnings", warnings}};
}

std::optional<std::string> match_template_id(std::string_view reply, const std::vector<std::string>& ids) {
  const std::string cleaned = util::to_lower(util::trim(reply));
  std::string first_line = cleaned.substr(0, cleaned.find('\n'));
  first_line = util::trim(first_line);
  // Tolerate quoting and trailing punctuation around a bare id.
  while (!first_line.empty() && std::string_view("\"'`.").find(first_line.back()) != std::string_view::npos)
    first_line.pop_back();
  while (!first_line.empty() && std::string_view("\"'`").find(first_line.front()) != std::string_view::npos)
    first_line.erase(0, 1);
  for (const auto& id : ids) {
    if (util::to_lower(id) == first_line) return id;
  }
  std::optional<std::string> best;
  for (const auto& id : ids) {
    if (cleaned.find(util::to_lower(id)) == std::string::npos) continue;
    if (!best || id.size() > best->size()) best = id;
  }
  return best;
}

std::string append_digest(std::string_view summary, std::string_view digest, std::size_t budget) {
  std::string out(summary);
  if (!out.empty()) out += "\n\n";
  out += digest;
  while (out.size() > budget) {
    const auto cut = out.find("\n\n");
    if (cut == std::string::npos || cut + 2 >= out.size()) {
      out.erase(0, out.size() - budget);
      break;
    }
    out.erase(0, cut + 2);
  }
  return out;
}

std::string step_digest(const DevTask& task, const StepSummary& summary) {
  std::vector<std::string> applied;
  std::vector<std::string> skipped;
  for (const auto& r : summary.results) {
    if (r.status == workspace::ApplyStatus::applied)
      applied.push_back(fmt::format("{} {}", workspace::to_string(r.kind), r.path));
    else
      skipped.push_back(fmt::format("{} ({})", r.path, workspace::to_string(r.status)));
  }
  std::string text = fmt::format("Round {} request: {}", task.round,
                                 util::truncate(util::collapse_whitespace(task.instruction), 400));
  text += applied.empty() ? " No files changed." : " Changed: " + util::join(applied, ", ") + ".";
  if (!skipped.empty()) text += " Not applied: " + util::join(skipped, ", ") + ".";
  if (!summary.rejected.empty()) text += " Rejected: " + util::join(summary.rejected, ", ") + ".";
  if (!summary.productive) text += " The step produced no usable changes.";
  return text;
}

DevAgent::DevAgent(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts,
                   DevAgentOptions options)
    : gateway_(gateway), config_(std::move(config)), prompts_(std::move(prompts)), options_(std::move(options)) {}

TemplateChoice DevAgent::select_template(const testgen::UserRequest& request, const workspace::TemplateStore& store) {
  if (store.empty()) throw UsageError("template store is empty");
  TemplateChoice choice;
  if (store.all().size() == 1) {
    choice.descriptor = &store.all().front();
    return choice;
  }
  std::string listing;
  std::vector<std::string> ids;
  for (const auto& t : store.all()) {
    listing += fmt::format("- {}: {}\n", t.id, t.description);
    ids.push_back(t.id);
  }
  const auto parts = prompts_.parts("template_select");
  gateway::PromptBundle b;
  b.system = parts.system;
  b.grammar = gateway::Grammar::free_text;
  b.add_text(util::render_template(parts.user, {{"description", request.description}, {"templates", listing}}));
  choice.model_called = true;
  const auto reply = gateway_.complete(b, config_);
  if (auto id = match_template_id(reply.raw, ids)) {
    choice.descriptor = &store.get(*id);
  } else if (store.contains(options_.fallback_template)) {
    choice.warnings.push_back(fmt::format("template classification named no known template ('{}'); using {}",
                                          util::truncate(util::trim(reply.raw), 80), options_.fallback_template));
    choice.descriptor = &store.get(options_.fallback_template);
  } else {
    choice.descriptor = &store.all().front();
    choice.warnings.push_back(fmt::format(
        "template classification named no known template and fallback '{}' is not in the store; using {}",
        options_.fallback_template, choice.descriptor->id));
  }
  if (journal_)
    journal_->append("template_selected", {{"template", choice.descriptor->id}, {"warnings", choice.warnings}});
  return choice;
}

namespace {

std::string summary_or_marker(const workspace::WorkspaceState& state) {
  return util::trim(state.chat_summary).empty() ? std::string(kNoHistory) : state.chat_summary;
}

}  // namespace

ContextSelection DevAgent::select_context(workspace::Workspace& ws, const DevTask& task,
                                          std::vector<std::string>* warnings) {
  const auto filtered = ws.filter_files();
  std::string buffer = "(no files loaded)\n";
  if (!ws.state().context_buffer.empty()) buffer = ws.render_context();
  const auto parts = prompts_.parts("context_select");
  gateway::PromptBundle b;
  b.system = parts.system;
  b.grammar = gateway::Grammar::xml_selection;
  b.add_text(util::render_template(parts.user, {{"available_files", util::join(filtered, "\n")},
                                                {"context_buffer", buffer},
                                                {"chat_summary", summary_or_marker(ws.state())},
                                                {"instructions", task.instruction}}));
  const auto doc = gateway_.complete_structured(b, config_);
  auto parsed = parse_selection(doc.text, filtered);
  apply_selection(ws, parsed.selection);
  if (warnings) warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
  if (journal_) {
    journal_->append("context_selected", {{"round", task.round},
                                          {"included", parsed.selection.included},
                                          {"excluded", parsed.selection.excluded},
                                          {"warnings", parsed.warnings}});
  }
  return parsed.selection;
}

gateway::PromptBundle DevAgent::build_dev_prompt(const workspace::Workspace& ws, const DevTask& task) const {
  const std::string context = ws.render_context();
  std::vector<std::string> locked(ws.state().locked.begin(), ws.state().locked.end());
  const auto parts = prompts_.parts("develop");
  gateway::PromptBundle b;
  b.system = util::render_template(parts.system, {{"protected_files", locked.empty() ? "(none)" : util::join(locked, "\n")}});
  b.grammar = gateway::Grammar::xml_actions;
  b.add_text(util::render_template(parts.user, {{"context_buffer", context},
                                                {"chat_summary", summary_or_marker(ws.state())},
                                                {"instructions", task.instruction}}));
  if (task.design_image) b.add_image(*task.design_image);
  return b;
}

StepSummary DevAgent::develop_step(workspace::Workspace& ws, const DevTask& task) {
  task.validate();
  StepSummary summary;
  summary.round = task.round;

  try {
    select_context(ws, task, &summary.warnings);
  } catch (const gateway::MalformedAfterRetries& e) {
    summary.warnings.push_back(fmt::format("context selection failed, keeping the current buffer: {}", e.what()));
  }
  if (ws.state().context_buffer.empty()) {
    // Nothing selected and nothing loaded: fall back to the whole filtered tree.
    for (const auto& p : ws.filter_files()) ws.load_file(p);
    summary.warnings.push_back("context selection left the buffer empty; loaded every filtered file");
  }

  std::optional<ActionParse> parsed;
  if (!ws.state().context_buffer.empty()) {
    const auto bundle = build_dev_prompt(ws, task);
    const gateway::Validator need_actions = [](const gateway::ParsedDocument& doc) -> std::optional<std::string> {
      if (parse_actions(doc.text).actions.empty()) return std::string(NoActionsFound().what());
      return std::nullopt;
    };
    try {
      const auto doc = gateway_.complete_structured(bundle, config_, need_actions);
      parsed = parse_actions(doc.text);
    } catch (const gateway::MalformedAfterRetries& e) {
      summary.diagnostics.push_back(e.what());
    }
  } else {
    summary.diagnostics.push_back("workspace has no files to work on");
  }

  if (parsed) {
    summary.diagnostics.insert(summary.diagnostics.end(), parsed->diagnostics.begin(), parsed->diagnostics.end());
    for (const auto& action : parsed->actions) {
      try {
        auto result = ws.apply_action(action);
        summary.warnings.insert(summary.warnings.end(), result.warnings.begin(), result.warnings.end());
        summary.results.push_back(std::move(result));
      } catch (const workspace::InvalidAction& e) {
        summary.rejected.push_back(fmt::format("{}: {}", action.path, e.what()));
      }
    }
  }
  summary.productive = summary.applied_count() > 0;

  ws.set_chat_summary(append_digest(ws.state().chat_summary, step_digest(task, summary), options_.summary_budget));
  ws.save();
  if (journal_) journal_->append("develop_step", summary.to_json());
  return summary;
}

}  // namespace appforge::devagent

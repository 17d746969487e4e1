#include "appforge/testrunner/types.hpp"

#include "appforge/util/text.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace appforge::testrunner {

std::string_view to_string(AppState s) {
  switch (s) {
    case AppState::starting: return "starting";
    case AppState::ready: return "ready";
    case AppState::failed: return "failed";
    case AppState::stopped: return "stopped";
  }
  return "stopped";
}

std::string_view to_string(FailureSignal s) {
  switch (s) {
    case FailureSignal::blank_screen: return "blank-screen";
    case FailureSignal::crash_overlay: return "crash-overlay";
    case FailureSignal::probe_timeout: return "probe-timeout";
    case FailureSignal::process_exit: return "process-exit";
  }
  return "process-exit";
}

std::string_view to_string(StepVerdict v) {
  switch (v) {
    case StepVerdict::met: return "met";
    case StepVerdict::unmet: return "unmet";
    case StepVerdict::skipped: return "skipped";
  }
  return "skipped";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "YES";
    case Verdict::no: return "NO";
    case Verdict::partial: return "PARTIAL";
  }
  return "NO";
}

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::launch_failure: return "launch-failure";
    case ErrorCategory::element_not_found: return "element-not-found";
    case ErrorCategory::assertion_mismatch: return "assertion-mismatch";
    case ErrorCategory::navigation_error: return "navigation-error";
    case ErrorCategory::timeout: return "timeout";
    case ErrorCategory::auth_wall: return "auth-wall";
    case ErrorCategory::other: return "other";
  }
  return "other";
}

FailureSignal failure_signal_from_string(std::string_view s) {
  for (auto f : {FailureSignal::blank_screen, FailureSignal::crash_overlay, FailureSignal::probe_timeout,
                 FailureSignal::process_exit})
    if (to_string(f) == s) return f;
  throw UsageError(fmt::format("unknown failure signal '{}'", s));
}

StepVerdict step_verdict_from_string(std::string_view s) {
  for (auto v : {StepVerdict::met, StepVerdict::unmet, StepVerdict::skipped})
    if (to_string(v) == s) return v;
  throw UsageError(fmt::format("unknown step verdict '{}'", s));
}

Verdict verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::yes, Verdict::no, Verdict::partial})
    if (util::iequals(to_string(v), util::trim(s))) return v;
  throw UsageError(fmt::format("unknown verdict '{}' (YES, NO or PARTIAL)", s));
}

ErrorCategory error_category_from_string(std::string_view s) {
  auto lowered = util::to_lower(util::trim(s));
  std::replace_if(lowered.begin(), lowered.end(), [](char c) { return c == '_' || c == ' '; }, '-');
  for (auto c : {ErrorCategory::launch_failure, ErrorCategory::element_not_found, ErrorCategory::assertion_mismatch,
                 ErrorCategory::navigation_error, ErrorCategory::timeout, ErrorCategory::auth_wall,
                 ErrorCategory::other})
    if (to_string(c) == lowered) return c;
  return ErrorCategory::other;
}

nlohmann::json to_json(const DeploymentVerdict& d) {
  nlohmann::json signals = nlohmann::json::array();
  for (auto s : d.signals) signals.push_back(to_string(s));
  nlohmann::json j{{"ok", d.ok}, {"signals", signals}, {"diagnostics", d.diagnostics},
                   {"screenshot_captured", !d.screenshot.empty()}};
  j["discrepancy_notes"] = d.discrepancy_notes ? nlohmann::json(*d.discrepancy_notes) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const StepTrace& t) {
  nlohmann::json j{{"index", t.index}, {"actions", t.actions}, {"observed", t.observed},
                   {"verdict", to_string(t.verdict)}};
  j["screenshot"] = t.screenshot_ref ? nlohmann::json(*t.screenshot_ref) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const TestReport& r) {
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& t : r.traces) traces.push_back(to_json(t));
  nlohmann::json j{{"test_id", r.test_id},
                   {"verdict", to_string(r.verdict)},
                   {"expected", r.expected},
                   {"actual", r.actual},
                   {"technical_info", r.technical_info},
                   {"recommendations", r.recommendations},
                   {"steps", traces}};
  j["failed_step"] = r.failed_step ? nlohmann::json(*r.failed_step) : nlohmann::json();
  j["error_category"] = r.category ? nlohmann::json(to_string(*r.category)) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const FeedbackBundle& b) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : b.reports) reports.push_back(to_json(r));
  return {{"schema", kFeedbackSchema},
          {"round", b.round},
          {"deployment", to_json(b.deployment)},
          {"counts", {{"yes", b.counts.yes}, {"partial", b.counts.partial}, {"no", b.counts.no}, {"total", b.counts.total()}}},
          {"reports", reports},
          {"digest", b.digest}};
}

DeploymentVerdict deployment_from_json(const nlohmann::json& j) {
  DeploymentVerdict d;
  d.ok = j.at("ok").get<bool>();
  for (const auto& s : j.at("signals")) d.signals.push_back(failure_signal_from_string(s.get<std::string>()));
  d.diagnostics = j.value("diagnostics", "");
  if (j.contains("discrepancy_notes") && j["discrepancy_notes"].is_string())
    d.discrepancy_notes = j["discrepancy_notes"].get<std::string>();
  return d;
}

StepTrace step_trace_from_json(const nlohmann::json& j) {
  StepTrace t;
  t.index = j.at("index").get<int>();
  t.actions = j.at("actions").get<std::vector<std::string>>();
  t.observed = j.value("observed", "");
  t.verdict = step_verdict_from_string(j.at("verdict").get<std::string>());
  if (j.contains("screenshot") && j["screenshot"].is_string()) t.screenshot_ref = j["screenshot"].get<std::string>();
  return t;
}

TestReport report_from_json(const nlohmann::json& j) {
  TestReport r;
  r.test_id = j.at("test_id").get<std::string>();
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  if (j.contains("failed_step") && j["failed_step"].is_number_integer()) r.failed_step = j["failed_step"].get<int>();
  r.expected = j.value("expected", "");
  r.actual = j.value("actual", "");
  if (j.contains("error_category") && j["error_category"].is_string())
    r.category = error_category_from_string(j["error_category"].get<std::string>());
  r.technical_info = j.value("technical_info", "");
  r.recommendations = j.value("recommendations", std::vector<std::string>{});
  for (const auto& t : j.value("steps", nlohmann::json::array())) r.traces.push_back(step_trace_from_json(t));
  return r;
}

FeedbackBundle feedback_from_json(const nlohmann::json& j) {
  const auto schema = j.is_object() ? j.value("schema", "") : std::string();
  if (schema != kFeedbackSchema)
    throw UsageError(fmt::format("unsupported feedback schema '{}' (expected {})", schema, kFeedbackSchema));
  try {
    FeedbackBundle b;
    b.round = j.at("round").get<int>();
    b.deployment = deployment_from_json(j.at("deployment"));
    for (const auto& r : j.at("reports")) b.reports.push_back(report_from_json(r));
    const auto& c = j.at("counts");
    b.counts.yes = c.at("yes").get<std::size_t>();
    b.counts.partial = c.at("partial").get<std::size_t>();
    b.counts.no = c.at("no").get<std::size_t>();
    b.digest = j.value("digest", "");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("malformed feedback bundle: {}", e.what()));
  }
}

}  // namespace appforge::testrunner

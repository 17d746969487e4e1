#pragma once

#include "appforge/util/errors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::testrunner {

inline constexpr const char* kFeedbackSchema = "appforge.feedback/1";

enum class AppState { starting, ready, failed, stopped };
enum class FailureSignal { blank_screen, crash_overlay, probe_timeout, process_exit };
enum class StepVerdict { met, unmet, skipped };
enum class Verdict { yes, no, partial };
enum class ErrorCategory {
  launch_failure,
  element_not_found,
  assertion_mismatch,
  navigation_error,
  timeout,
  auth_wall,
  other
};

std::string_view to_string(AppState s);
std::string_view to_string(FailureSignal s);
std::string_view to_string(StepVerdict v);
std::string_view to_string(Verdict v);  // "YES" / "NO" / "PARTIAL"
std::string_view to_string(ErrorCategory c);
FailureSignal failure_signal_from_string(std::string_view s);
StepVerdict step_verdict_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);  // case-insensitive
// Unknown strings map to `other`.
ErrorCategory error_category_from_string(std::string_view s);

struct DeploymentVerdict {
  bool ok = false;
  // PNG bytes when the driver can take screenshots. Not serialized.
  std::vector<std::uint8_t> screenshot;
  std::vector<FailureSignal> signals;
  // Diagnostics for a failed launch (captured logs, probe errors).
  std::string diagnostics;
  std::optional<std::string> discrepancy_notes;
};

struct StepTrace {
  int index = 1;
  std::vector<std::string> actions;  // e.g. "navigate /login", "click @3"
  std::string observed;
  std::optional<std::string> screenshot_ref;
  StepVerdict verdict = StepVerdict::skipped;
};

struct TestReport {
  std::string test_id;
  Verdict verdict = Verdict::no;
  std::optional<int> failed_step;
  std::string expected;
  std::string actual;
  std::optional<ErrorCategory> category;
  std::string technical_info;
  std::vector<std::string> recommendations;
  std::vector<StepTrace> traces;
};

struct PassCounts {
  std::size_t yes = 0;
  std::size_t partial = 0;
  std::size_t no = 0;
  std::size_t total() const { return yes + partial + no; }
};

struct FeedbackBundle {
  int round = 0;
  DeploymentVerdict deployment;
  std::vector<TestReport> reports;
  PassCounts counts;
  std::string digest;
};

class ProbeTimeout : public Error {
 public:
  ProbeTimeout(const std::string& what, std::string logs) : Error(what), logs_(std::move(logs)) {}
  const std::string& logs() const { return logs_; }

 private:
  std::string logs_;
};

class ProcessExited : public Error {
 public:
  ProcessExited(const std::string& what, int status, std::string logs)
      : Error(what), status_(status), logs_(std::move(logs)) {}
  int status() const { return status_; }
  const std::string& logs() const { return logs_; }

 private:
  int status_;
  std::string logs_;
};

nlohmann::json to_json(const DeploymentVerdict& d);
nlohmann::json to_json(const StepTrace& t);
nlohmann::json to_json(const TestReport& r);
nlohmann::json to_json(const FeedbackBundle& b);
DeploymentVerdict deployment_from_json(const nlohmann::json& j);
StepTrace step_trace_from_json(const nlohmann::json& j);
TestReport report_from_json(const nlohmann::json& j);
// Rejects documents with an unknown schema marker.
FeedbackBundle feedback_from_json(const nlohmann::json& j);

}  // namespace appforge::testrunner

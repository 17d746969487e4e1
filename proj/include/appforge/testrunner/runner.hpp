#pragma once

#include "appforge/gateway/gateway.hpp"
#include "appforge/testgen/types.hpp"
#include "appforge/testrunner/browser.hpp"
#include "appforge/testrunner/feedback.hpp"
#include "appforge/testrunner/ports.hpp"
#include "appforge/testrunner/process.hpp"
#include "appforge/util/journal.hpp"
#include "appforge/util/prompts.hpp"
#include "appforge/workspace/workspace.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <variant>

namespace appforge::testrunner {

struct RunnerOptions {
  std::size_t parallelism = 1;
  // Model decisions per step, the forced final judgment included.
  int step_budget = 15;
  // Extra attempts for a browser action that failed transiently.
  int retry_bound = 2;
  int base_port = 41000;
  std::chrono::milliseconds probe_timeout{30000};
  std::chrono::milliseconds probe_interval{100};
  std::chrono::milliseconds install_timeout{600000};
  // Share of pixels in one quantized colour above which a page is blank.
  double blank_threshold = 0.995;
  // Text-mode driver when unset.
  BrowserFactory browser;
  // PNG of the intended design; compared against the deployed home page.
  std::optional<std::vector<std::uint8_t>> expected_image;
  // Called with each instance's port once it is ready.
  std::function<void(int port)> on_instance_ready;
  // Where instance copies are made; a temporary directory when empty.
  std::filesystem::path scratch_dir;
  // Step screenshots are written here when set and the driver has them.
  std::optional<std::filesystem::path> screenshot_dir;
};

// A launched application. Stopping (or destroying) it kills the whole
// process group and frees its port.
class AppInstance {
 public:
  AppInstance(std::unique_ptr<Process> process, PortLease lease, AppState state, std::string failure = {});
  ~AppInstance();

  AppState state() const { return state_; }
  int port() const { return lease_.port(); }
  std::string base_url() const;
  std::string logs() const;
  const std::string& failure() const { return failure_; }
  void stop();

 private:
  std::unique_ptr<Process> process_;
  PortLease lease_;
  AppState state_;
  std::string failure_;
};

struct DriverDecision {
  enum class Kind { navigate, click, type, wait, judge } kind = Kind::judge;
  std::string path;
  int element = 0;
  std::string text;
  int ms = 0;
  bool met = false;
  std::string observed;
  std::string category;
  std::string recommendation;
};

// Returns the decision, or an error description for a re-ask.
std::variant<DriverDecision, std::string> parse_driver_decision(const nlohmann::json& reply, bool judge_only);

// YES when every step is met, NO when step 1 is not, PARTIAL otherwise.
Verdict verdict_from_traces(const std::vector<StepTrace>& traces);

class TestRunner {
 public:
  TestRunner(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts = {},
             RunnerOptions options = {});

  void set_journal(std::shared_ptr<util::Journal> journal) { journal_ = std::move(journal); }
  const RunnerOptions& options() const { return options_; }
  PortAllocator& ports() { return ports_; }

  // Starts the template's launch command in `dir` (install command first,
  // if any) and polls the readiness probe. Throws ProbeTimeout or
  // ProcessExited, both carrying the captured logs.
  std::unique_ptr<AppInstance> launch(const workspace::TemplateDescriptor& tmpl, const std::filesystem::path& dir,
                                      int requested_port = 0);

  DeploymentVerdict verify_deployment(AppInstance& instance, BrowserSession* session);

  // Never throws for test failures; only fatal gateway errors escape.
  TestReport run_test(AppInstance& instance, BrowserSession& session, const testgen::SoapOperaTestCase& test);

  // Throws UsageError for an empty suite.
  FeedbackBundle run_suite(const workspace::Workspace& ws, const std::vector<testgen::SoapOperaTestCase>& tests,
                           int round = 0);

  // run_test invocations so far.
  std::size_t test_executions() const { return executions_.load(); }

 private:
  BrowserFactory factory() const;
  void install(const workspace::TemplateDescriptor& tmpl, const std::filesystem::path& dir);

  gateway::Gateway& gateway_;
  gateway::ProviderConfig config_;
  util::PromptLibrary prompts_;
  RunnerOptions options_;
  PortAllocator ports_;
  std::shared_ptr<util::Journal> journal_;
  std::atomic<std::size_t> executions_{0};
};

// Deployment verdict for an instance that never became ready.
DeploymentVerdict failed_deployment(FailureSignal signal, std::string diagnostics);

}  // namespace appforge::testrunner

#include "appforge/testrunner/runner.hpp"

#include "appforge/testrunner/http_browser.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/util/raster.hpp"
#include "appforge/util/text.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <thread>

namespace appforge::testrunner {

AppInstance::AppInstance(std::unique_ptr<Process> process, PortLease lease, AppState state, std::string failure)
    : process_(std::move(process)), lease_(std::move(lease)), state_(state), failure_(std::move(failure)) {}

AppInstance::~AppInstance() { stop(); }

std::string AppInstance::base_url() const { return fmt::format("http://127.0.0.1:{}", port()); }

std::string AppInstance::logs() const { return process_ ? process_->logs() : std::string(); }

void AppInstance::stop() {
  if (process_) process_->stop();
  if (state_ == AppState::ready || state_ == AppState::starting) state_ = AppState::stopped;
  lease_.release();
}

DeploymentVerdict failed_deployment(FailureSignal signal, std::string diagnostics) {
  DeploymentVerdict d;
  d.ok = false;
  d.signals.push_back(signal);
  d.diagnostics = std::move(diagnostics);
  return d;
}

Verdict verdict_from_traces(const std::vector<StepTrace>& traces) {
  if (traces.empty() || traces.front().verdict != StepVerdict::met) return Verdict::no;
  for (const auto& t : traces)
    if (t.verdict != StepVerdict::met) return Verdict::partial;
  return Verdict::yes;
}

namespace {

std::optional<int> element_index(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    std::string s = util::trim(v.get<std::string>());
    if (!s.empty() && s.front() == '@') s.erase(0, 1);
    try {
      std::size_t used = 0;
      const int n = std::stoi(s, &used);
      if (used == s.size()) return n;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::string str(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) return {};
  return util::trim(j[key].get<std::string>());
}

}  // namespace

std::variant<DriverDecision, std::string> parse_driver_decision(const nlohmann::json& reply, bool judge_only) {
  if (!reply.is_object()) return std::string("reply must be a JSON object");
  const auto action = util::to_lower(str(reply, "action"));
  DriverDecision d;
  if (judge_only && action != "judge")
    return std::string("the interaction limit is reached; the only allowed action is \"judge\"");
  if (action == "judge") {
    d.kind = DriverDecision::Kind::judge;
    const auto verdict = util::to_lower(str(reply, "verdict"));
    if (verdict != "met" && verdict != "unmet") return std::string("\"verdict\" must be \"met\" or \"unmet\"");
    d.met = verdict == "met";
    d.observed = str(reply, "observed");
    d.category = str(reply, "category");
    d.recommendation = str(reply, "recommendation");
    return d;
  }
  if (action == "navigate") {
    d.kind = DriverDecision::Kind::navigate;
    d.path = str(reply, "path");
    if (d.path.empty()) d.path = str(reply, "url");
    if (d.path.empty()) return std::string("navigate needs a \"path\"");
    return d;
  }
  if (action == "click" || action == "type") {
    const auto idx = reply.contains("element") ? element_index(reply["element"]) : std::nullopt;
    if (!idx) return fmt::format("{} needs an integer \"element\"", action);
    d.element = *idx;
    if (action == "click") {
      d.kind = DriverDecision::Kind::click;
    } else {
      d.kind = DriverDecision::Kind::type;
      if (!reply.contains("text") || !reply["text"].is_string()) return std::string("type needs a \"text\" string");
      d.text = reply["text"].get<std::string>();
    }
    return d;
  }
  if (action == "wait") {
    d.kind = DriverDecision::Kind::wait;
    d.ms = reply.contains("ms") && reply["ms"].is_number() ? reply["ms"].get<int>() : 500;
    d.ms = std::clamp(d.ms, 0, 5000);
    return d;
  }
  return fmt::format("unknown action \"{}\" (navigate, click, type, wait or judge)", action);
}

TestRunner::TestRunner(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts,
                       RunnerOptions options)
    : gateway_(gateway), config_(std::move(config)), prompts_(std::move(prompts)), options_(std::move(options)),
      ports_(options_.base_port) {
  if (options_.parallelism < 1) throw UsageError("parallelism must be >= 1");
  if (options_.step_budget < 1) throw UsageError("step budget must be >= 1");
  if (options_.retry_bound < 0) throw UsageError("retry bound must be >= 0");
}

BrowserFactory TestRunner::factory() const {
  if (options_.browser) return options_.browser;
  return [](const std::string& base) -> std::unique_ptr<BrowserSession> { return std::make_unique<HttpBrowser>(base); };
}

void TestRunner::install(const workspace::TemplateDescriptor& tmpl, const std::filesystem::path& dir) {
  if (util::trim(tmpl.install_command).empty()) return;
  Process proc(shell_spec(tmpl.install_command, dir));
  const auto status = proc.wait_for(options_.install_timeout);
  proc.stop();
  if (!status) throw ProbeTimeout("install command timed out", proc.logs());
  if (*status != 0)
    throw ProcessExited(fmt::format("install command exited with status {}", *status), *status, proc.logs());
}

std::unique_ptr<AppInstance> TestRunner::launch(const workspace::TemplateDescriptor& tmpl,
                                                const std::filesystem::path& dir, int requested_port) {
  auto lease = ports_.allocate(requested_port);
  const auto port = std::to_string(lease.port());
  auto spec = shell_spec(util::replace_all(tmpl.launch_command, "{port}", port), dir);
  spec.env = {{"PORT", port}, {"HOST", "127.0.0.1"}, {"BROWSER", "none"}, {"CI", "1"}};
  std::unique_ptr<Process> proc;
  try {
    proc = std::make_unique<Process>(spec);
  } catch (const Error& e) {
    throw ProcessExited(e.what(), 127, "");
  }
  const auto deadline = std::chrono::steady_clock::now() + options_.probe_timeout;
  for (;;) {
    if (auto status = proc->exit_status()) {
      proc->stop();
      throw ProcessExited(fmt::format("launch command exited with status {} before the application was ready", *status),
                          *status, proc->logs());
    }
    httplib::Client probe("127.0.0.1", lease.port());
    probe.set_connection_timeout(0, 300000);
    probe.set_read_timeout(5, 0);
    if (auto res = probe.Get(tmpl.probe.path); res && res->status == tmpl.probe.expected_status) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      proc->stop();
      throw ProbeTimeout(fmt::format("readiness probe GET {} did not return {} within {} ms", tmpl.probe.path,
                                     tmpl.probe.expected_status, options_.probe_timeout.count()),
                         proc->logs());
    }
    std::this_thread::sleep_for(options_.probe_interval);
  }
  return std::make_unique<AppInstance>(std::move(proc), std::move(lease), AppState::ready);
}

namespace {

template <typename Fn>
void with_retries(int bound, Fn&& fn) {
  for (int attempt = 0;; ++attempt) {
    try {
      fn();
      return;
    } catch (const BrowserError& e) {
      if (!e.transient() || attempt >= bound) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
    }
  }
}

}  // namespace

DeploymentVerdict TestRunner::verify_deployment(AppInstance& instance, BrowserSession* session) {
  if (instance.state() != AppState::ready)
    return failed_deployment(FailureSignal::process_exit, instance.failure() + "\n" + instance.logs());
  DeploymentVerdict v;
  PageSnapshot snap;
  try {
    with_retries(options_.retry_bound, [&] { session->navigate("/"); });
    snap = session->snapshot();
    if (auto shot = session->screenshot()) v.screenshot = std::move(*shot);
  } catch (const BrowserError& e) {
    return failed_deployment(FailureSignal::probe_timeout,
                             fmt::format("the home page could not be loaded: {}\n{}", e.what(), instance.logs()));
  }
  if (options_.screenshot_dir && !v.screenshot.empty()) {
    util::write_file(*options_.screenshot_dir / "deployment.png",
                     std::string(v.screenshot.begin(), v.screenshot.end()));
  }

  std::vector<std::string> notes;
  bool blank = false;
  if (!v.screenshot.empty()) {
    try {
      blank = util::dominant_color_share(util::decode_png(v.screenshot)) >= options_.blank_threshold;
    } catch (const Error&) {
      blank = false;
    }
  } else {
    blank = util::trim(snap.text).empty() && snap.elements.empty();
  }
  if (blank) {
    v.signals.push_back(FailureSignal::blank_screen);
    notes.push_back("The home page renders blank (no visible content).");
  }

  if (snap.status >= 500) {
    v.signals.push_back(FailureSignal::crash_overlay);
    notes.push_back(fmt::format("The home page returned HTTP {}.", snap.status));
  } else if (!blank) {
    const auto parts = prompts_.parts("crash_check");
    gateway::PromptBundle b;
    b.system = parts.system;
    b.grammar = gateway::Grammar::json_object;
    b.add_text(util::render_template(
        parts.user, {{"status", std::to_string(snap.status)},
                     {"title", snap.title.empty() ? "(none)" : snap.title},
                     {"text", snap.text.empty() ? "(no visible text)" : util::truncate(snap.text, 4000)},
                     {"screenshot_note", v.screenshot.empty() ? "" : "\nA screenshot of the page is attached.\n"}}));
    if (!v.screenshot.empty()) b.add_image({"png", v.screenshot});
    const gateway::Validator has_flag = [](const gateway::ParsedDocument& doc) -> std::optional<std::string> {
      if (!doc.json.contains("crash") || !doc.json["crash"].is_boolean())
        return std::string("the object needs a boolean \"crash\" field");
      return std::nullopt;
    };
    try {
      const auto doc = gateway_.complete_structured(b, config_, has_flag);
      if (doc.json["crash"].get<bool>()) {
        v.signals.push_back(FailureSignal::crash_overlay);
        notes.push_back("The home page shows an error instead of the application: " + str(doc.json, "evidence"));
      }
    } catch (const gateway::MalformedAfterRetries&) {
      // An inconclusive check does not block testing.
    }
  }

  if (options_.expected_image) {
    if (v.screenshot.empty()) {
      v.discrepancy_notes = std::string("No screenshot available for comparison with the design image.");
    } else if (*options_.expected_image == v.screenshot) {
      v.discrepancy_notes = std::string();
    } else {
      const auto parts = prompts_.parts("visual_discrepancy");
      gateway::PromptBundle b;
      b.system = parts.system;
      b.add_text(parts.user);
      b.add_image({"png", *options_.expected_image});
      b.add_image({"png", v.screenshot});
      v.discrepancy_notes = util::trim(gateway_.complete(b, config_).raw);
    }
  }

  v.ok = v.signals.empty();
  if (!v.ok) {
    notes.push_back("Page text: " + util::truncate(util::collapse_whitespace(snap.text), 1500));
    notes.push_back(instance.logs());
    v.diagnostics = util::join(notes, "\n");
  }
  return v;
}

TestReport TestRunner::run_test(AppInstance& instance, BrowserSession& session, const testgen::SoapOperaTestCase& test) {
  ++executions_;
  TestReport report;
  report.test_id = test.id;
  for (const auto& s : test.steps) report.traces.push_back({s.index, {}, "", std::nullopt, StepVerdict::skipped});

  if (instance.state() != AppState::ready) {
    report.verdict = Verdict::no;
    report.category = ErrorCategory::launch_failure;
    report.expected = test.steps.empty() ? "" : test.steps.front().expected;
    report.actual = "The application did not start.";
    report.technical_info = instance.failure();
    report.recommendations = {"Make the application start cleanly with the template's launch command."};
    return report;
  }

  std::string previous;
  bool started = false;
  try {
    with_retries(options_.retry_bound, [&] { session.navigate("/"); });
    started = true;
  } catch (const BrowserError& e) {
    report.traces.front().verdict = StepVerdict::unmet;
    report.traces.front().observed = fmt::format("The home page could not be opened: {}", e.what());
    report.failed_step = 1;
    report.category = ErrorCategory::navigation_error;
    report.expected = test.steps.front().expected;
    report.actual = report.traces.front().observed;
    report.recommendations = {"Make sure the home page is served and reachable."};
  }

  for (std::size_t k = 0; started && k < test.steps.size(); ++k) {
    const auto& step = test.steps[k];
    auto& trace = report.traces[k];
    std::vector<std::string> history;
    std::optional<DriverDecision> verdict;
    std::optional<ErrorCategory> last_error;
    std::string last_error_text;

    for (int call = 1; call <= options_.step_budget && !verdict; ++call) {
      const bool forced = call == options_.step_budget;
      std::string page;
      try {
        page = session.snapshot().render();
      } catch (const BrowserError& e) {
        page = fmt::format("(the page could not be read: {})", e.what());
      }
      const auto parts = prompts_.parts(forced ? "driver_decision" : "driver");
      gateway::PromptBundle b;
      b.system = parts.system;
      b.grammar = gateway::Grammar::json_object;
      b.add_text(util::render_template(
          parts.user, {{"persona_name", test.persona.name},
                       {"persona_goal", test.persona.goal},
                       {"test_id", test.id},
                       {"step_index", std::to_string(step.index)},
                       {"step_count", std::to_string(test.steps.size())},
                       {"step_action", step.action},
                       {"step_expected", step.expected},
                       {"previous_steps", previous.empty() ? "(none)\n" : previous},
                       {"step_history", history.empty() ? "(nothing yet)\n" : util::join(history, "\n") + "\n"},
                       {"page", page}}));
      const gateway::Validator check = [forced](const gateway::ParsedDocument& doc) -> std::optional<std::string> {
        auto parsed = parse_driver_decision(doc.json, forced);
        if (auto* err = std::get_if<std::string>(&parsed)) return *err;
        return std::nullopt;
      };
      DriverDecision d;
      try {
        d = std::get<DriverDecision>(parse_driver_decision(gateway_.complete_structured(b, config_, check).json, forced));
      } catch (const gateway::MalformedAfterRetries& e) {
        d.kind = DriverDecision::Kind::judge;
        d.met = false;
        d.observed = "The tester produced no valid decision for this step.";
        d.category = "other";
        report.technical_info = e.what();
      }
      if (d.kind == DriverDecision::Kind::judge) {
        verdict = d;
        break;
      }

      std::string label;
      switch (d.kind) {
        case DriverDecision::Kind::navigate: label = "navigate " + d.path; break;
        case DriverDecision::Kind::click: label = fmt::format("click @{}", d.element); break;
        case DriverDecision::Kind::type: label = fmt::format("type @{} \"{}\"", d.element, d.text); break;
        case DriverDecision::Kind::wait: label = fmt::format("wait {} ms", d.ms); break;
        case DriverDecision::Kind::judge: break;
      }
      trace.actions.push_back(label);
      try {
        with_retries(options_.retry_bound, [&] {
          switch (d.kind) {
            case DriverDecision::Kind::navigate: session.navigate(d.path); break;
            case DriverDecision::Kind::click: session.click(d.element); break;
            case DriverDecision::Kind::type: session.type(d.element, d.text); break;
            case DriverDecision::Kind::wait: session.wait(std::chrono::milliseconds(d.ms)); break;
            case DriverDecision::Kind::judge: break;
          }
        });
        history.push_back(fmt::format("{}. {} -> ok", history.size() + 1, label));
      } catch (const BrowserError& e) {
        last_error = e.category();
        last_error_text = e.what();
        history.push_back(fmt::format("{}. {} -> failed: {}", history.size() + 1, label, e.what()));
      }
    }

    trace.observed = verdict->observed;
    trace.verdict = verdict->met ? StepVerdict::met : StepVerdict::unmet;
    if (options_.screenshot_dir) {
      try {
        if (auto shot = session.screenshot()) {
          const auto name = fmt::format("{}-step{}.png", test.id, step.index);
          util::write_file(*options_.screenshot_dir / name, std::string(shot->begin(), shot->end()));
          trace.screenshot_ref = name;
        }
      } catch (const BrowserError&) {
      }
    }
    previous += fmt::format("Step {} ({}): {}\n", step.index, to_string(trace.verdict),
                            verdict->observed.empty() ? step.expected : verdict->observed);
    if (!verdict->met) {
      report.failed_step = step.index;
      report.expected = step.expected;
      report.actual = verdict->observed;
      if (!verdict->category.empty()) report.category = error_category_from_string(verdict->category);
      else report.category = last_error.value_or(ErrorCategory::assertion_mismatch);
      if (!verdict->recommendation.empty()) report.recommendations.push_back(verdict->recommendation);
      else report.recommendations.push_back(fmt::format("Make step {} (\"{}\") produce: {}", step.index, step.action, step.expected));
      if (!last_error_text.empty() && report.technical_info.empty())
        report.technical_info = "Last browser error: " + last_error_text;
      break;
    }
  }
  report.verdict = verdict_from_traces(report.traces);
  return report;
}

FeedbackBundle TestRunner::run_suite(const workspace::Workspace& ws, const std::vector<testgen::SoapOperaTestCase>& tests,
                                     int round) {
  if (tests.empty()) throw UsageError("the test suite is empty");
  std::filesystem::path scratch = options_.scratch_dir;
  bool owns_scratch = false;
  if (scratch.empty()) {
    scratch = util::make_temp_dir("appforge-instances-");
    owns_scratch = true;
  }
  struct ScratchGuard {
    std::filesystem::path dir;
    bool owned;
    ~ScratchGuard() {
      if (owned) {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
      }
    }
  } guard{scratch, owns_scratch};

  const auto& tmpl = ws.descriptor();
  const std::size_t wanted = std::min(options_.parallelism, tests.size());
  if (journal_) journal_->append("suite_started", {{"round", round}, {"tests", tests.size()}, {"instances", wanted}});

  auto instance_dir = [&](std::size_t k) { return scratch / fmt::format("round-{}-instance-{}", round, k + 1); };
  std::vector<std::unique_ptr<AppInstance>> instances;

  auto finish = [&](std::vector<TestReport> reports, DeploymentVerdict deployment) {
    instances.clear();
    auto bundle = build_feedback(std::move(reports), std::move(deployment), round);
    if (journal_)
      journal_->append("suite_finished", {{"round", round},
                                          {"deployment_ok", bundle.deployment.ok},
                                          {"yes", bundle.counts.yes},
                                          {"partial", bundle.counts.partial},
                                          {"no", bundle.counts.no}});
    return bundle;
  };

  // First instance: install, launch, verify. Any failure aborts the suite.
  std::filesystem::remove_all(instance_dir(0));
  ws.snapshot_to(instance_dir(0));
  try {
    install(tmpl, instance_dir(0));
    instances.push_back(launch(tmpl, instance_dir(0)));
  } catch (const ProcessExited& e) {
    return finish({}, failed_deployment(FailureSignal::process_exit, std::string(e.what()) + "\n" + e.logs()));
  } catch (const ProbeTimeout& e) {
    return finish({}, failed_deployment(FailureSignal::probe_timeout, std::string(e.what()) + "\n" + e.logs()));
  }
  if (options_.on_instance_ready) options_.on_instance_ready(instances.front()->port());

  DeploymentVerdict deployment;
  try {
    auto session = factory()(instances.front()->base_url());
    deployment = verify_deployment(*instances.front(), session.get());
  } catch (const BrowserError& e) {
    deployment = failed_deployment(FailureSignal::probe_timeout, fmt::format("browser driver failed: {}", e.what()));
  }
  if (!deployment.ok) return finish({}, std::move(deployment));

  for (std::size_t k = 1; k < wanted; ++k) {
    std::filesystem::remove_all(instance_dir(k));
    util::copy_tree(instance_dir(0), instance_dir(k));
    try {
      instances.push_back(launch(tmpl, instance_dir(k)));
      if (options_.on_instance_ready) options_.on_instance_ready(instances.back()->port());
    } catch (const Error& e) {
      // The suite still runs on the instances that did start.
      if (journal_) journal_->append("instance_failed", {{"round", round}, {"instance", k + 1}, {"error", e.what()}});
    }
  }

  std::vector<TestReport> reports(tests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  const auto make_session = factory();

  auto worker = [&](AppInstance& inst) {
    for (std::size_t i = next++; i < tests.size() && !abort.load(); i = next++) {
      try {
        // A fresh session per test keeps cookies and history from leaking
        // between tests, whatever the scheduling.
        auto session = make_session(inst.base_url());
        reports[i] = run_test(inst, *session, tests[i]);
      } catch (const BrowserError& e) {
        reports[i].test_id = tests[i].id;
        reports[i].verdict = Verdict::no;
        reports[i].category = ErrorCategory::other;
        reports[i].actual = fmt::format("The browser driver failed: {}", e.what());
        for (const auto& s : tests[i].steps) reports[i].traces.push_back({s.index, {}, "", std::nullopt, StepVerdict::skipped});
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t k = 1; k < instances.size(); ++k) threads.emplace_back(worker, std::ref(*instances[k]));
  worker(*instances.front());
  for (auto& t : threads) t.join();
  if (fatal) {
    instances.clear();
    std::rethrow_exception(fatal);
  }
  return finish(std::move(reports), std::move(deployment));
}

}  // namespace appforge::testrunner

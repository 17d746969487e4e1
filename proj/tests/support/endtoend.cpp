#include "endtoend.hpp"

#include "fake_model.hpp"
#include "fixtures.hpp"
#include "scenarios.hpp"
#include "scripted_provider.hpp"

#include "appforge/cli/cli.hpp"
#include "appforge/orchestrator/pipeline.hpp"
#include "appforge/testrunner/runner.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/workspace/templates.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>

namespace appforge::testing {

CliOutcome invoke_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "appforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_scenario_config(const fs::path& dir, int max_iter) {
  auto doc = scenario_config(max_iter).to_json();
  doc.erase("cassette_mode");
  doc.erase("cassette_path");
  fs::create_directories(dir);
  const auto path = dir / fmt::format("config-{}.json", max_iter);
  util::write_json(path, doc);
  return path;
}

namespace {

// Data of the last progress event with this name, or null.
nlohmann::json event_data(const std::string& stdout_text, const std::string& name) {
  nlohmann::json found;
  std::istringstream lines(stdout_text);
  for (std::string line; std::getline(lines, line);) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_object() && j.value("event", "") == name) found = j["data"];
  }
  return found;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

// Processes present now that were not in `before`.
std::vector<int> new_processes(const std::set<int>& before) {
  std::vector<int> out;
  for (int pid : live_descendants())
    if (!before.contains(pid)) out.push_back(pid);
  return out;
}

std::unique_ptr<gateway::Gateway> fake_gateway(std::shared_ptr<FakeModel> model) {
  return std::make_unique<gateway::Gateway>(std::make_unique<ScriptedProvider>(handler_for(std::move(model))),
                                            gateway::CassetteMode::passthrough);
}

std::vector<std::string> verdicts(const testrunner::FeedbackBundle& b) {
  std::vector<std::string> out;
  for (const auto& r : b.reports) out.push_back(fmt::format("{}={}", r.test_id, testrunner::to_string(r.verdict)));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PropertyOutcome check_cli_replay(const std::string& name, const fs::path& scratch) {
  PropertyOutcome out;
  const auto& s = replay_scenario(name);
  const auto dir = scenario_dir(name);
  const auto config = write_scenario_config(scratch, s.max_iter);
  const auto expected = golden_files(dir / "golden");
  if (expected.empty()) out.fail("no goldens committed for " + name);

  std::vector<fs::path> runs;
  for (const char* label : {"first", "second"}) {
    ++out.cases;
    const auto run_dir = scratch / label;
    const auto r = invoke_cli({"generate", "--desc-file", (dir / "request.txt").string(), "--replay",
                               (dir / "cassette.ndjson").string(), "--config", config.string(), "--max-iter",
                               std::to_string(s.max_iter), "--parallelism", "2", "--browser", "http",
                               "--template-store", store_dir("basic").string(), "--out", run_dir.string()});
    if (r.code != cli::kExitOk) {
      out.fail(fmt::format("{} run exited {}: {}", label, r.code, r.err));
      continue;
    }
    const auto finished = event_data(r.out, "run_finished");
    if (!finished.is_object() || finished.value("provider_calls", -1) != 0)
      out.fail(fmt::format("{} run: provider calls {}", label, finished.dump()));
    runs.push_back(run_dir);
  }

  for (const auto& run_dir : runs) {
    const auto produced = golden_files(run_dir);
    if (produced != expected)
      out.fail(fmt::format("{}: files [{}] vs goldens [{}]", run_dir.filename().string(), fmt::join(produced, ", "),
                           fmt::join(expected, ", ")));
    for (const auto& rel : expected) {
      ++out.cases;
      if (!fs::exists(run_dir / rel) || util::read_file(run_dir / rel) != util::read_file(dir / "golden" / rel))
        out.fail(fmt::format("{}: {} differs from the golden", run_dir.filename().string(), rel));
    }
  }
  return out;
}

PropertyOutcome check_orchestration_bounds(const fs::path& scratch) {
  PropertyOutcome out;
  for (const auto& s : replay_scenarios()) {
    for (int max_iter = 0; max_iter <= 3; ++max_iter, ++out.cases) {
      const auto gw = gateway::Gateway::replay_only(scenario_dir(s.name) / "cassette.ndjson");
      orchestrator::Pipeline pipeline(*gw, scenario_config(max_iter),
                                      scratch / fmt::format("{}-{}", s.name, max_iter));
      testgen::UserRequest request;
      request.description = s.description;
      const auto result = pipeline.run(request);
      const auto want_runs = static_cast<std::size_t>(std::min(max_iter, s.rounds_to_full_pass));
      const auto tag = fmt::format("{} max_iter={}", s.name, max_iter);
      if (result.suite_runs != want_runs)
        out.fail(fmt::format("{}: {} suite runs, expected {}", tag, result.suite_runs, want_runs));
      if (result.develop_steps > static_cast<std::size_t>(max_iter) + 1)
        out.fail(fmt::format("{}: {} develop steps", tag, result.develop_steps));
      if (gw->provider_calls() != 0) out.fail(tag + ": provider was called");
    }
  }
  return out;
}

PropertyOutcome check_abort_and_cleanup(const fs::path& scratch) {
  PropertyOutcome out;
  const auto before = as_set(live_descendants());

  {
    ++out.cases;
    const workspace::TemplateStore store(store_dir("exiting"));
    const auto ws = workspace::Workspace::init_from_template(store.get("exits-immediately"), scratch / "exit-ws");
    auto model = std::make_shared<FakeModel>();
    auto gw = fake_gateway(model);
    testrunner::RunnerOptions opts;
    opts.parallelism = 2;
    opts.probe_timeout = std::chrono::milliseconds(5000);
    opts.scratch_dir = scratch / "exit-instances";
    testrunner::TestRunner runner(*gw, test_provider_config(), {}, opts);
    const auto bundle = runner.run_suite(ws, parallel_suite());
    if (bundle.deployment.ok) out.fail("deployment of an exiting server reported ok");
    if (!bundle.reports.empty()) out.fail(fmt::format("{} reports for an aborted suite", bundle.reports.size()));
    if (runner.test_executions() != 0) out.fail(fmt::format("{} test executions", runner.test_executions()));
    if (gw->provider_calls() != 0) out.fail(fmt::format("{} model calls", gw->provider_calls()));
    const auto& sig = bundle.deployment.signals;
    if (std::find(sig.begin(), sig.end(), testrunner::FailureSignal::process_exit) == sig.end())
      out.fail("no process-exit signal");
    if (bundle.deployment.diagnostics.find("cannot bind") == std::string::npos)
      out.fail("diagnostics lack the server's output: " + bundle.deployment.diagnostics);
  }

  {
    ++out.cases;
    auto model = std::make_shared<FakeModel>();
    auto gw = fake_gateway(model);
    const auto ws = parallel_workspace(scratch / "live-ws");
    testrunner::RunnerOptions opts;
    opts.parallelism = 2;
    opts.step_budget = 6;
    opts.scratch_dir = scratch / "live-instances";
    std::vector<int> during;
    opts.on_instance_ready = [&](int) { during = live_descendants(); };
    testrunner::TestRunner runner(*gw, test_provider_config(), {}, opts);
    const auto bundle = runner.run_suite(ws, parallel_suite());
    if (bundle.reports.size() != 4) out.fail(fmt::format("{} reports from the live suite", bundle.reports.size()));
    if (during.empty()) out.fail("no server process was observed while the suite ran");
  }

  ++out.cases;
  if (const auto left = new_processes(before); !left.empty())
    out.fail(fmt::format("processes survived run_suite: {}", fmt::join(left, ", ")));
  if (const auto left = processes_with_cwd_under(scratch); !left.empty())
    out.fail(fmt::format("processes still running in instance directories: {}", fmt::join(left, ", ")));
  return out;
}

PropertyOutcome check_parallel_determinism(const fs::path& scratch) {
  PropertyOutcome out;
  const auto dir = scenario_dir(kParallelScenario);
  const auto golden = testrunner::load_feedback(dir / "golden" / "feedback.json");
  const auto ws = parallel_workspace(scratch / "ws");
  const auto tests = parallel_suite();

  for (std::size_t parallelism : {std::size_t{1}, std::size_t{4}}) {
    ++out.cases;
    const auto gw = gateway::Gateway::replay_only(dir / "cassette.ndjson");
    std::mutex mu;
    std::vector<int> ports;
    testrunner::RunnerOptions opts;
    opts.parallelism = parallelism;
    opts.step_budget = 6;
    opts.on_instance_ready = [&](int port) {
      std::lock_guard lock(mu);
      ports.push_back(port);
    };
    testrunner::TestRunner runner(*gw, test_provider_config(), {}, opts);
    const auto bundle = runner.run_suite(ws, tests);
    const auto tag = fmt::format("parallelism {}", parallelism);

    if (verdicts(bundle) != verdicts(golden))
      out.fail(fmt::format("{}: verdicts [{}] vs recorded [{}]", tag, fmt::join(verdicts(bundle), ", "),
                           fmt::join(verdicts(golden), ", ")));
    const auto saved = scratch / fmt::format("feedback-{}.json", parallelism);
    testrunner::save_feedback(saved, bundle);
    if (util::read_file(saved) != util::read_file(dir / "golden" / "feedback.json"))
      out.fail(tag + ": feedback bundle differs from the recording");
    // All instances of a suite live until it ends, so their ports must differ.
    if (ports.size() != parallelism) out.fail(fmt::format("{}: {} instances became ready", tag, ports.size()));
    if (as_set(ports).size() != ports.size()) out.fail(fmt::format("{}: ports [{}] repeat", tag, fmt::join(ports, ", ")));
    if (gw->provider_calls() != 0) out.fail(tag + ": provider was called");
  }
  return out;
}

}  // namespace appforge::testing

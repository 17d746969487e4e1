// Regenerates the replay fixtures under tests/fixtures/replay: for each
// scenario, the fake model answers a real pipeline run in record mode, and
// the run's golden files are copied next to the cassette.

#include "../support/fake_model.hpp"
#include "../support/fixtures.hpp"
#include "../support/scenarios.hpp"

#include "appforge/testrunner/http_browser.hpp"
#include "appforge/testrunner/runner.hpp"
#include "appforge/util/fs.hpp"

#include <fmt/format.h>

#include <iostream>

using namespace appforge;
namespace fs = std::filesystem;

namespace {

std::unique_ptr<gateway::Gateway> recording_gateway(const testing::FakeWorld& world, const fs::path& cassette) {
  auto model = std::make_shared<testing::FakeModel>(world);
  return std::make_unique<gateway::Gateway>(
      std::make_unique<testing::ScriptedProvider>(testing::handler_for(model)), gateway::CassetteMode::record,
      cassette);
}

void record_pipeline(const testing::ReplayScenario& s, const fs::path& out) {
  fs::remove_all(out);
  fs::create_directories(out);
  util::write_file(out / "request.txt", s.description + "\n");
  auto gw = recording_gateway(s.world, out / "cassette.ndjson");
  testing::TempDir tmp("appforge-record-");
  const auto run_dir = tmp / "run";
  orchestrator::Pipeline pipeline(*gw, testing::scenario_config(s.max_iter), run_dir);
  testgen::UserRequest request;
  request.description = s.description;
  const auto result = pipeline.run(request);
  for (const auto& rel : testing::golden_files(run_dir)) {
    fs::create_directories((out / "golden" / rel).parent_path());
    fs::copy_file(run_dir / rel, out / "golden" / rel);
  }
  std::cout << fmt::format("{}: {} suite runs, {} develop steps, {} cassette entries\n", s.name, result.suite_runs,
                           result.develop_steps, gw->cassette().size());
}

void record_parallel_suite(const fs::path& out) {
  fs::remove_all(out);
  fs::create_directories(out);
  testing::FakeWorld world;
  auto gw = recording_gateway(world, out / "cassette.ndjson");
  testing::TempDir tmp("appforge-record-");
  const auto ws = testing::parallel_workspace(tmp / "ws");
  testrunner::RunnerOptions opts;
  opts.parallelism = 1;
  opts.step_budget = 6;
  testrunner::TestRunner runner(*gw, testing::test_provider_config(), {}, opts);
  const auto bundle = runner.run_suite(ws, testing::parallel_suite());
  testrunner::save_feedback(out / "golden" / "feedback.json", bundle);
  std::cout << fmt::format("{}: {} yes, {} partial, {} no\n", testing::kParallelScenario, bundle.counts.yes,
                           bundle.counts.partial, bundle.counts.no);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : testing::fixture_dir() / "replay";
  try {
    for (const auto& s : testing::replay_scenarios()) record_pipeline(s, root / s.name);
    record_parallel_suite(root / testing::kParallelScenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

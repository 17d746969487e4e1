#pragma once

#include "fake_model.hpp"
#include "fixtures.hpp"

#include "appforge/orchestrator/pipeline.hpp"
#include "appforge/testgen/types.hpp"
#include "appforge/workspace/workspace.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace appforge::testing {

// A recorded pipeline run: the fake world that answered, and the request.
struct ReplayScenario {
  std::string name;
  FakeWorld world;
  std::string description;
  int max_iter = 3;
  // Suite runs until every test passes, given the world.
  int rounds_to_full_pass = 0;
};

const std::vector<ReplayScenario>& replay_scenarios();
const ReplayScenario& replay_scenario(const std::string& name);

// tests/fixtures/replay/<name>
fs::path scenario_dir(const std::string& name);

// Pipeline settings shared by the recorder and every replay.
orchestrator::PipelineConfig scenario_config(int max_iter);

// Files compared byte for byte between a run directory and its goldens.
std::vector<std::string> golden_files(const fs::path& run_dir);

// The fixed four-test suite and workspace used for parallel replays: the
// page shows done:R1 and done:R2, so verdicts are mixed.
std::vector<testgen::SoapOperaTestCase> parallel_suite();
workspace::Workspace parallel_workspace(const fs::path& dest);
inline constexpr const char* kParallelScenario = "parallel-suite";

}  // namespace appforge::testing

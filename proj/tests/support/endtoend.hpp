#pragma once

#include "properties.hpp"

#include <filesystem>
#include <string>
#include <vector>

// Whole-system checks over the replay fixtures, shared by the end-to-end
// tests and the acceptance runner. Each takes an empty scratch directory.
namespace appforge::testing {

struct CliOutcome {
  int code = 0;
  std::string out;
  std::string err;
};

// Runs the command-line entry point in process.
CliOutcome invoke_cli(std::vector<std::string> args);

// Config file matching the recorded pipeline settings, for the CLI.
std::filesystem::path write_scenario_config(const std::filesystem::path& dir, int max_iter);

// `generate --replay` twice on a recorded scenario: both run directories
// equal the committed goldens byte for byte and no provider call is made.
PropertyOutcome check_cli_replay(const std::string& scenario, const std::filesystem::path& scratch);

// Pipeline runs for max_iter 0..3 on every scenario: suite runs equal
// min(max_iter, rounds to full pass), develop steps stay within max_iter + 1.
PropertyOutcome check_orchestration_bounds(const std::filesystem::path& scratch);

// A template whose server exits at once yields a diagnostic-only bundle with
// no test executed and no model call; after a full suite on a live template
// no launched process remains.
PropertyOutcome check_abort_and_cleanup(const std::filesystem::path& scratch);

// The recorded four-test suite at parallelism 1 and 4: same verdicts, and
// concurrent instances never share a port.
PropertyOutcome check_parallel_determinism(const std::filesystem::path& scratch);

}  // namespace appforge::testing

#pragma once

#include "appforge/testrunner/types.hpp"

#include <filesystem>

namespace appforge::testrunner {

PassCounts tally(const std::vector<TestReport>& reports);

// Counts and digest are derived here; nothing else sets them.
FeedbackBundle build_feedback(std::vector<TestReport> reports, DeploymentVerdict deployment, int round);

// Text handed to the development agent. Each non-YES report gets exactly
// one entry, introduced by "- <test id> (<verdict>)".
std::string render_digest(const FeedbackBundle& bundle);

void save_feedback(const std::filesystem::path& path, const FeedbackBundle& bundle);
FeedbackBundle load_feedback(const std::filesystem::path& path);

}  // namespace appforge::testrunner

#pragma once

#include "appforge/gateway/gateway.hpp"
#include "appforge/testgen/types.hpp"
#include "appforge/testrunner/runner.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace appforge::orchestrator {

inline constexpr const char* kResultSchema = "appforge.result/1";

struct PipelineConfig {
  // Feedback cycles; 0 disables testing entirely.
  int max_iter = 3;
  std::size_t parallelism = 1;
  int step_budget = 15;
  int retry_bound = 2;
  testgen::TestgenMode testgen_mode = testgen::TestgenMode::multi_step;
  std::size_t testgen_concurrency = 4;
  gateway::ProviderConfig provider;
  gateway::CassetteMode cassette_mode = gateway::CassetteMode::passthrough;
  std::optional<std::filesystem::path> cassette_path;
  std::filesystem::path template_store;
  std::string fallback_template = "static-site";
  // Locked in addition to each template's protected files.
  std::vector<std::string> extra_locked;
  // Browser driver: auto, http or cdp.
  std::string browser = "auto";
  int base_port = 41000;
  std::chrono::milliseconds probe_timeout{30000};
  // Directory overriding the built-in prompt templates.
  std::optional<std::filesystem::path> prompt_dir;

  void validate() const;
  // Without credentials.
  nlohmann::json to_json() const;
  // Keys missing from `doc` keep their defaults.
  static PipelineConfig from_json(const nlohmann::json& doc);
};

struct RoundRecord {
  int round = 0;
  std::string tree_hash;
  // Absent for a round that was never tested.
  std::optional<testrunner::FeedbackBundle> feedback;
  double pass_rate = 0.0;

  bool tested() const { return feedback.has_value(); }
};

struct PipelineResult {
  int selected_round = 0;
  std::vector<RoundRecord> records;
  std::filesystem::path final_workspace;
  testgen::Suite suite;
  std::filesystem::path journal_path;
  std::size_t suite_runs = 0;
  std::size_t develop_steps = 0;

  const RoundRecord& selected() const;
  nlohmann::json to_json() const;
};

// YES / total; 0 for a bundle without reports.
double tdd_pass_rate(const testrunner::FeedbackBundle& bundle);

// Highest pass rate wins, the latest round on ties. A round that was never
// tested competes with the rate of the nearest earlier tested round, since
// it is that round plus one refinement. Throws UsageError when empty.
const RoundRecord& select_best_round(const std::vector<RoundRecord>& records);

// Progress callback: event name and fields (the same records that go to
// the journal).
using ProgressFn = std::function<void(const std::string& event, const nlohmann::json& fields)>;

class Pipeline {
 public:
  // The run directory must be absent or empty.
  Pipeline(gateway::Gateway& gateway, PipelineConfig config, std::filesystem::path run_dir);

  void on_progress(ProgressFn fn) { progress_ = std::move(fn); }
  // Lets callers adjust testing (browser factory, port observer) before
  // each suite run.
  void customize_runner(std::function<void(testrunner::RunnerOptions&)> fn) { customize_ = std::move(fn); }

  // Fatal gateway errors propagate after being journaled.
  PipelineResult run(const testgen::UserRequest& request);

 private:
  void event(const std::string& name, nlohmann::json fields = nlohmann::json::object());

  gateway::Gateway& gateway_;
  PipelineConfig config_;
  std::filesystem::path run_dir_;
  std::shared_ptr<util::Journal> journal_;
  ProgressFn progress_;
  std::function<void(testrunner::RunnerOptions&)> customize_;
};

// Instruction for the first development step.
std::string initial_instruction(const testgen::UserRequest& request, const testgen::Suite& suite);
// Instruction for a development step that follows a test run.
std::string feedback_instruction(const testgen::Suite& suite, const testrunner::FeedbackBundle& feedback);

// Directory of round k inside a run directory.
std::filesystem::path round_dir(const std::filesystem::path& run_dir, int round);

}  // namespace appforge::orchestrator

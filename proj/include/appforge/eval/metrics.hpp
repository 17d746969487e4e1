#pragma once

#include "appforge/gateway/gateway.hpp"
#include "appforge/testrunner/types.hpp"
#include "appforge/util/errors.hpp"
#include "appforge/util/prompts.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::eval {

using testrunner::Verdict;

inline constexpr const char* kRecordsSchema = "appforge.eval-records/1";

class ZeroTotal : public UsageError {
 public:
  ZeroTotal() : UsageError("accuracy is undefined for zero test cases") {}
};

class UnlabeledTest : public UsageError {
 public:
  using UsageError::UsageError;
};

struct EvalVerdictCounts {
  std::int64_t yes = 0;
  std::int64_t partial = 0;
  std::int64_t no = 0;
  std::int64_t fail_to_start = 0;  // tests belonging to apps that never started, already inside `no`

  std::int64_t total() const { return yes + partial + no; }
  void add(Verdict v);
  EvalVerdictCounts& operator+=(const EvalVerdictCounts& o);
};

// (yes + 0.5 * partial) / total * 100. Throws ZeroTotal.
double accuracy(const EvalVerdictCounts& c);

struct EvalTest {
  std::string test_id;
  std::optional<Verdict> verdict;  // may be absent for an app that failed to start
  std::string instruction_category;
  std::string test_category;
};

struct EvalRecord {
  std::string app_id;
  bool started = true;
  std::vector<EvalTest> tests;
  std::optional<double> appearance;
  std::optional<double> similarity;

  // Scores in [1,5]; started apps need a verdict on every test.
  void validate() const;
  // Verdict used for aggregation: NO for every test of an app that failed to start.
  Verdict effective_verdict(const EvalTest& t) const;
};

nlohmann::json to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);

struct RecordsLoad {
  std::vector<EvalRecord> records;
  std::vector<std::string> errors;  // one line per bad record
};

// Accepts a records document, a bare array of records, a single record, or
// a directory of such files (sorted by name).
RecordsLoad load_records(const std::filesystem::path& path);

EvalVerdictCounts overall_counts(const std::vector<EvalRecord>& records);

struct CategoryResult {
  EvalVerdictCounts counts;
  int apps = 0;
  int started_apps = 0;
  std::optional<double> accuracy;  // empty means N.A.: no app in the category started
};

struct CategoryBreakdown {
  std::map<std::string, CategoryResult> by_instruction;
  std::map<std::string, CategoryResult> by_test_category;
};

// Throws UnlabeledTest when a test lacks either category label.
CategoryBreakdown category_accuracy(const std::vector<EvalRecord>& records);

struct AlignmentPair {
  std::string test_id;
  Verdict agent = Verdict::no;
  Verdict manual = Verdict::no;
};

struct AlignmentInput {
  std::vector<AlignmentPair> pairs;
};

struct AlignmentResult {
  std::int64_t matched = 0;
  std::int64_t total = 0;
  double rate = 0.0;
  std::int64_t restricted_matched = 0;
  std::int64_t restricted_total = 0;
  std::optional<double> restricted_rate;  // over cases whose manual verdict is YES or NO
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// Throws UsageError on empty input.
AlignmentResult alignment_rate(const AlignmentInput& input);

// Reads a verdict file: either {"T-R1": "YES", ...} or [{"test_id":..., "verdict":...}].
std::map<std::string, Verdict> load_verdicts(const std::filesystem::path& path);
// Pairs by test id; ids present in only one file are a UsageError listing them.
AlignmentInput pair_verdicts(const std::map<std::string, Verdict>& agent,
                             const std::map<std::string, Verdict>& manual);

// The rendering goes first, the design second.
gateway::PromptBundle build_visual_prompt(const gateway::ImageAttachment& screenshot,
                                          const gateway::ImageAttachment& design,
                                          const util::PromptLibrary& prompts = {});

// Aspect names from the numbered "N. Name:" lines of a rubric text.
std::vector<std::string> rubric_aspects(const std::string& rubric);

struct ScoreParse {
  double score = 0.0;
  std::optional<std::string> warning;  // set when the value was clamped into [1,5]
};

class ScoreMissing : public Error {
 public:
  using Error::Error;
};

// First number on the last non-empty line. Throws ScoreMissing.
ScoreParse parse_score(const std::string& reply);

ScoreParse score_visual_similarity(gateway::Gateway& gateway, const gateway::ProviderConfig& config,
                                   const gateway::ImageAttachment& screenshot,
                                   const gateway::ImageAttachment& design,
                                   const util::PromptLibrary& prompts = {});

}  // namespace appforge::eval

#include "appforge/orchestrator/pipeline.hpp"

#include "appforge/devagent/agent.hpp"
#include "appforge/testgen/agent.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include <fmt/format.h>

namespace appforge::orchestrator {

void PipelineConfig::validate() const {
  if (max_iter < 0) throw UsageError("max_iter must be >= 0");
  if (parallelism < 1) throw UsageError("parallelism must be >= 1");
  if (step_budget < 1) throw UsageError("step budget must be >= 1");
  if (retry_bound < 0) throw UsageError("retry bound must be >= 0");
  if (testgen_concurrency < 1) throw UsageError("testgen concurrency must be >= 1");
  if (base_port <= 0 || base_port > 65535) throw UsageError("base port out of range");
  if (browser != "auto" && browser != "http" && browser != "cdp")
    throw UsageError(fmt::format("unknown browser driver '{}' (auto, http or cdp)", browser));
  if (cassette_mode != gateway::CassetteMode::passthrough && !cassette_path)
    throw UsageError("record and replay modes need a cassette file");
  if (template_store.empty()) throw UsageError("no template store configured");
  provider.validate();
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j{{"max_iter", max_iter},
                   {"parallelism", parallelism},
                   {"step_budget", step_budget},
                   {"retry_bound", retry_bound},
                   {"testgen", testgen::to_string(testgen_mode)},
                   {"testgen_concurrency", testgen_concurrency},
                   {"provider", provider.to_json()},
                   {"cassette_mode", gateway::to_string(cassette_mode)},
                   {"template_store", template_store.string()},
                   {"fallback_template", fallback_template},
                   {"extra_locked", extra_locked},
                   {"browser", browser},
                   {"base_port", base_port},
                   {"probe_timeout_ms", probe_timeout.count()}};
  j["cassette"] = cassette_path ? nlohmann::json(cassette_path->string()) : nlohmann::json();
  j["prompt_dir"] = prompt_dir ? nlohmann::json(prompt_dir->string()) : nlohmann::json();
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw UsageError("config document must be a JSON object");
  PipelineConfig c;
  try {
    c.max_iter = doc.value("max_iter", c.max_iter);
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.step_budget = doc.value("step_budget", c.step_budget);
    c.retry_bound = doc.value("retry_bound", c.retry_bound);
    if (doc.contains("testgen")) c.testgen_mode = testgen::testgen_mode_from_string(doc["testgen"].get<std::string>());
    c.testgen_concurrency = doc.value("testgen_concurrency", c.testgen_concurrency);
    if (doc.contains("provider")) c.provider = gateway::ProviderConfig::from_json(doc);
    if (doc.contains("cassette_mode"))
      c.cassette_mode = gateway::cassette_mode_from_string(doc["cassette_mode"].get<std::string>());
    if (doc.contains("cassette") && doc["cassette"].is_string()) c.cassette_path = doc["cassette"].get<std::string>();
    if (doc.contains("template_store")) c.template_store = doc["template_store"].get<std::string>();
    c.fallback_template = doc.value("fallback_template", c.fallback_template);
    c.extra_locked = doc.value("extra_locked", c.extra_locked);
    c.browser = doc.value("browser", c.browser);
    c.base_port = doc.value("base_port", c.base_port);
    c.probe_timeout = std::chrono::milliseconds(doc.value("probe_timeout_ms", static_cast<std::int64_t>(c.probe_timeout.count())));
    if (doc.contains("prompt_dir") && doc["prompt_dir"].is_string()) c.prompt_dir = doc["prompt_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("invalid config: {}", e.what()));
  }
  return c;
}

double tdd_pass_rate(const testrunner::FeedbackBundle& bundle) {
  const auto counts = testrunner::tally(bundle.reports);
  if (counts.total() == 0) return 0.0;
  return static_cast<double>(counts.yes) / static_cast<double>(counts.total());
}

const RoundRecord& select_best_round(const std::vector<RoundRecord>& records) {
  if (records.empty()) throw UsageError("no rounds to select from");
  const RoundRecord* best = nullptr;
  double best_rate = 0.0;
  double inherited = 0.0;
  for (const auto& r : records) {
    const double rate = r.tested() ? r.pass_rate : inherited;
    if (r.tested()) inherited = r.pass_rate;
    if (!best || rate > best_rate || (rate == best_rate && r.round >= best->round)) {
      best = &r;
      best_rate = rate;
    }
  }
  return *best;
}

const RoundRecord& PipelineResult::selected() const {
  for (const auto& r : records)
    if (r.round == selected_round) return r;
  throw Error("selected round is missing from the records");
}

nlohmann::json PipelineResult::to_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j{{"round", r.round}, {"tree_hash", r.tree_hash}, {"tested", r.tested()}};
    j["pass_rate"] = r.tested() ? nlohmann::json(r.pass_rate) : nlohmann::json();
    rounds.push_back(std::move(j));
  }
  return {{"schema", kResultSchema},   {"selected_round", selected_round}, {"suite_runs", suite_runs},
          {"develop_steps", develop_steps}, {"rounds", rounds}};
}

std::filesystem::path round_dir(const std::filesystem::path& run_dir, int round) {
  return run_dir / "rounds" / fmt::format("round-{}", round);
}

namespace {

std::string requirement_list(const testgen::Suite& suite) {
  std::string out;
  for (const auto& r : suite.requirements)
    out += fmt::format("- [{}] ({}, {}) {}\n", r.id, testgen::to_string(r.kind), testgen::to_string(r.origin), r.statement);
  return out;
}

}  // namespace

std::string initial_instruction(const testgen::UserRequest& request, const testgen::Suite& suite) {
  std::string out = "Build the web application the user asked for.\n\nUser request:\n" + util::trim(request.description) + "\n";
  if (request.design_image) out += "\nA design image is attached; follow its layout and visual design.\n";
  out += "\nRequirements to implement:\n" + requirement_list(suite);
  return out;
}

std::string feedback_instruction(const testgen::Suite& suite, const testrunner::FeedbackBundle& feedback) {
  return "The application was tested against its requirements. Fix every problem reported below and keep "
         "whatever already works.\n\nRequirements:\n" +
         requirement_list(suite) + "\n" + feedback.digest;
}

Pipeline::Pipeline(gateway::Gateway& gateway, PipelineConfig config, std::filesystem::path run_dir)
    : gateway_(gateway), config_(std::move(config)), run_dir_(std::move(run_dir)) {}

void Pipeline::event(const std::string& name, nlohmann::json fields) {
  if (journal_) journal_->append(name, fields);
  if (progress_) progress_(name, fields);
}

PipelineResult Pipeline::run(const testgen::UserRequest& request) {
  request.validate();
  config_.validate();
  if (std::filesystem::exists(run_dir_) && !std::filesystem::is_empty(run_dir_))
    throw UsageError(fmt::format("run directory {} is not empty", run_dir_.string()));
  std::filesystem::create_directories(run_dir_);
  util::write_json(run_dir_ / "config.json", config_.to_json());
  nlohmann::json req{{"description", request.description}};
  if (request.design_image) {
    const auto name = "design." + request.design_image->format;
    util::write_file(run_dir_ / name,
                     std::string(request.design_image->bytes.begin(), request.design_image->bytes.end()));
    req["design_image"] = name;
  }
  util::write_json(run_dir_ / "request.json", req);
  journal_ = std::make_shared<util::Journal>(run_dir_ / "journal.ndjson");

  PipelineResult result;
  result.journal_path = journal_->path();
  result.final_workspace = run_dir_ / "selected";
  const util::PromptLibrary prompts = config_.prompt_dir ? util::PromptLibrary(*config_.prompt_dir) : util::PromptLibrary();

  event("pipeline_started", {{"max_iter", config_.max_iter},
                             {"testgen", testgen::to_string(config_.testgen_mode)},
                             {"parallelism", config_.parallelism}});
  try {
    testgen::TestGenerator generator(gateway_, config_.provider, prompts,
                                     {config_.testgen_mode, config_.testgen_concurrency});
    result.suite = generator.generate_suite(request);
    testgen::save_suite(run_dir_ / "suite.json", result.suite);
    event("suite_generated", {{"requirements", result.suite.requirements.size()}, {"tests", result.suite.tests.size()}});

    const workspace::TemplateStore store(config_.template_store);
    devagent::DevAgent dev(gateway_, config_.provider, prompts, {config_.fallback_template});
    const auto choice = dev.select_template(request, store);
    event("template_selected", {{"template", choice.descriptor->id}, {"warnings", choice.warnings}});

    auto ws = workspace::Workspace::init_from_template(*choice.descriptor, run_dir_ / "workspace", config_.extra_locked);
    ws.set_journal(journal_);

    auto develop = [&](devagent::DevTask task) {
      const auto summary = dev.develop_step(ws, task);
      ++result.develop_steps;
      event("develop_step", summary.to_json());
      RoundRecord record;
      record.round = task.round;
      record.tree_hash = ws.tree_hash();
      const auto dir = round_dir(run_dir_, task.round);
      util::write_file(dir / "tree.sha256", record.tree_hash + "\n");
      ws.snapshot_to(dir / "tree");
      result.records.push_back(std::move(record));
    };

    develop({initial_instruction(request, result.suite), 0, request.design_image});

    for (int it = 1; it <= config_.max_iter; ++it) {
      auto& current = result.records.back();
      testrunner::RunnerOptions opts;
      opts.parallelism = config_.parallelism;
      opts.step_budget = config_.step_budget;
      opts.retry_bound = config_.retry_bound;
      opts.base_port = config_.base_port;
      opts.probe_timeout = config_.probe_timeout;
      opts.browser = testrunner::make_browser_factory(config_.browser);
      opts.scratch_dir = run_dir_ / ".instances";
      if (request.design_image && request.design_image->format == "png") opts.expected_image = request.design_image->bytes;
      if (customize_) customize_(opts);
      testrunner::TestRunner runner(gateway_, config_.provider, prompts, opts);
      runner.set_journal(journal_);
      auto feedback = runner.run_suite(ws, result.suite.tests, current.round);
      ++result.suite_runs;
      std::filesystem::remove_all(run_dir_ / ".instances");
      testrunner::save_feedback(round_dir(run_dir_, current.round) / "feedback.json", feedback);
      current.pass_rate = tdd_pass_rate(feedback);
      event("round_tested", {{"round", current.round},
                             {"deployment_ok", feedback.deployment.ok},
                             {"yes", feedback.counts.yes},
                             {"partial", feedback.counts.partial},
                             {"no", feedback.counts.no},
                             {"pass_rate", current.pass_rate}});
      current.feedback = std::move(feedback);
      if (current.pass_rate >= 1.0) break;
      const int next_round = current.round + 1;
      develop({feedback_instruction(result.suite, *result.records.back().feedback), next_round, request.design_image});
    }

    const auto& best = select_best_round(result.records);
    result.selected_round = best.round;
    util::copy_tree(round_dir(run_dir_, best.round) / "tree", result.final_workspace);
    util::write_json(run_dir_ / "result.json", result.to_json());
    event("pipeline_finished", {{"selected_round", result.selected_round},
                                {"suite_runs", result.suite_runs},
                                {"develop_steps", result.develop_steps}});
  } catch (const std::exception& e) {
    std::filesystem::remove_all(run_dir_ / ".instances");
    event("pipeline_failed", {{"error", e.what()}});
    throw;
  }
  return result;
}

}  // namespace appforge::orchestrator

#include "appforge/cli/cli.hpp"

#include "appforge/eval/report.hpp"
#include "appforge/orchestrator/pipeline.hpp"
#include "appforge/testgen/agent.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <random>

#ifndef APPFORGE_SOURCE_TEMPLATES
#define APPFORGE_SOURCE_TEMPLATES "templates"
#endif

namespace appforge::cli {

namespace fs = std::filesystem;

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::done: return "done";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j{{"schema", kManifestSchema}, {"run_id", run_id},     {"config", config},
                   {"testgen", testgen_mode},   {"started_at", started_at}, {"status", to_string(status)}};
  j["finished_at"] = finished_at.empty() ? nlohmann::json() : nlohmann::json(finished_at);
  j["error"] = error.empty() ? nlohmann::json() : nlohmann::json(error);
  return j;
}

void RunManifest::save(const fs::path& run_dir) const { util::write_json(run_dir / "manifest.json", to_json()); }

int exit_code_for(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const testgen::StageError& s) {
    return s.cause() ? exit_code_for(s.cause()) : kExitInternal;
  } catch (const UsageError&) {
    return kExitUsage;
  } catch (const workspace::TemplateNotFound&) {
    return kExitUsage;
  } catch (const gateway::ProviderUnreachable&) {
    return kExitProvider;
  } catch (const gateway::CassetteMiss&) {
    return kExitProvider;
  } catch (const gateway::MalformedAfterRetries&) {
    return kExitProvider;
  } catch (const gateway::TransportError&) {
    return kExitProvider;
  } catch (...) {
    return kExitInternal;
  }
}

std::string remediation_hint(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const testgen::StageError& s) {
    return s.cause() ? remediation_hint(s.cause()) : std::string();
  } catch (const gateway::CassetteMiss&) {
    return "the cassette has no reply for this prompt; re-record it with --record against a live provider";
  } catch (const gateway::ProviderUnreachable&) {
    return "check APPFORGE_ENDPOINT, APPFORGE_API_KEY and network access";
  } catch (const gateway::TransportError&) {
    return "check APPFORGE_ENDPOINT, APPFORGE_API_KEY and network access";
  } catch (const gateway::MalformedAfterRetries&) {
    return "the model kept answering in the wrong format; try a stronger model or raise provider.max_reasks";
  } catch (const workspace::TemplateNotFound&) {
    return "point --template-store at a directory of template manifests";
  } catch (...) {
    return {};
  }
}

fs::path default_template_store() {
  if (const char* env = std::getenv("APPFORGE_TEMPLATES"); env && *env) return env;
  return APPFORGE_SOURCE_TEMPLATES;
}

namespace {

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

std::string fresh_run_id() {
  std::random_device rd;
  const auto stamp = fmt::format("{:%Y%m%dT%H%M%SZ}",
                                 fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
  return fmt::format("run-{}-{:04x}", stamp, rd() & 0xffff);
}

void emit(std::ostream& out, const std::string& event, const nlohmann::json& data) {
  out << nlohmann::json{{"event", event}, {"data", data}}.dump() << "\n";
  out.flush();
}

int report_failure(std::exception_ptr e, std::ostream& out, std::ostream& err) {
  const int code = exit_code_for(e);
  std::string what = "unknown error";
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    what = ex.what();
  } catch (...) {
  }
  err << "error: " << what << "\n";
  if (const auto hint = remediation_hint(e); !hint.empty()) err << "hint: " << hint << "\n";
  emit(out, "error", {{"message", what}, {"exit_code", code}});
  return code;
}

struct GatewayFlags {
  std::string record;
  std::string replay;
};

void add_gateway_flags(CLI::App& cmd, GatewayFlags& g) {
  auto* rec = cmd.add_option("--record", g.record, "Record model replies to this cassette file");
  auto* rep = cmd.add_option("--replay", g.replay, "Replay model replies from this cassette file (no network)");
  rec->excludes(rep);
}

void apply_gateway_flags(const GatewayFlags& g, orchestrator::PipelineConfig& c) {
  if (!g.record.empty()) {
    c.cassette_mode = gateway::CassetteMode::record;
    c.cassette_path = g.record;
  } else if (!g.replay.empty()) {
    c.cassette_mode = gateway::CassetteMode::replay;
    c.cassette_path = g.replay;
  }
}

std::unique_ptr<gateway::Gateway> make_gateway(const orchestrator::PipelineConfig& c) {
  if (c.cassette_mode == gateway::CassetteMode::replay) {
    if (!c.cassette_path || !fs::exists(*c.cassette_path))
      throw UsageError(fmt::format("cassette {} does not exist", c.cassette_path ? c.cassette_path->string() : ""));
    return gateway::Gateway::replay_only(*c.cassette_path);
  }
  if (c.provider.api_key.empty())
    throw UsageError("no provider credential; set APPFORGE_API_KEY or use --replay with a cassette");
  return std::make_unique<gateway::Gateway>(std::make_unique<gateway::HttpChatProvider>(), c.cassette_mode,
                                            c.cassette_path);
}

orchestrator::PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw UsageError(fmt::format("config file {} does not exist", path));
  nlohmann::json doc;
  try {
    doc = util::read_json(path);
  } catch (const std::exception& e) {
    throw UsageError(fmt::format("config file {}: {}", path, e.what()));
  }
  return orchestrator::PipelineConfig::from_json(doc);
}

struct GenerateArgs {
  std::string desc, desc_file, image, config, out, template_store, browser, prompt_dir, testgen;
  int max_iter = -1;
  std::size_t parallelism = 0;
  int base_port = 0;
  GatewayFlags gateway;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  orchestrator::PipelineConfig config = load_config(a.config);
  if (a.max_iter >= 0) config.max_iter = a.max_iter;
  if (a.parallelism > 0) config.parallelism = a.parallelism;
  if (!a.testgen.empty()) config.testgen_mode = testgen::testgen_mode_from_string(a.testgen);
  if (!a.browser.empty()) config.browser = a.browser;
  if (a.base_port > 0) config.base_port = a.base_port;
  if (!a.prompt_dir.empty()) config.prompt_dir = a.prompt_dir;
  if (!a.template_store.empty()) config.template_store = a.template_store;
  if (config.template_store.empty()) config.template_store = default_template_store();
  apply_gateway_flags(a.gateway, config);
  config.provider.apply_environment();

  testgen::UserRequest request;
  if (!a.desc.empty() && !a.desc_file.empty()) throw UsageError("give either --desc or --desc-file, not both");
  if (!a.desc_file.empty()) {
    if (!fs::exists(a.desc_file)) throw UsageError(fmt::format("description file {} does not exist", a.desc_file));
    request.description = util::read_file(a.desc_file);
  } else {
    request.description = a.desc;
  }
  // A file's final newline is not part of the requirement.
  request.description = util::trim(request.description);
  if (util::trim(request.description).empty())
    throw UsageError("a requirement description is required (--desc or --desc-file)");
  if (!a.image.empty()) request.design_image = testgen::UserRequest::load_image(a.image);
  request.validate();
  config.validate();

  auto gw = make_gateway(config);
  const fs::path run_dir = a.out.empty() ? fs::path("runs") / fresh_run_id() : fs::path(a.out);

  RunManifest manifest;
  manifest.run_id = run_dir.filename().string();
  manifest.config = config.to_json();
  manifest.testgen_mode = std::string(testgen::to_string(config.testgen_mode));
  manifest.started_at = utc_now();

  orchestrator::Pipeline pipeline(*gw, config, run_dir);
  pipeline.on_progress([&](const std::string& event, const nlohmann::json& fields) {
    if (event == "pipeline_started") manifest.save(run_dir);
    emit(out, event, fields);
  });
  try {
    const auto result = pipeline.run(request);
    manifest.status = RunStatus::done;
    manifest.finished_at = utc_now();
    manifest.save(run_dir);
    emit(out, "run_finished", {{"run_dir", run_dir.string()},
                               {"selected_round", result.selected_round},
                               {"workspace", result.final_workspace.string()},
                               {"provider_calls", gw->provider_calls()}});
    return kExitOk;
  } catch (...) {
    if (fs::exists(run_dir / "manifest.json")) {
      manifest.status = RunStatus::failed;
      manifest.finished_at = utc_now();
      try {
        std::rethrow_exception(std::current_exception());
      } catch (const std::exception& e) {
        manifest.error = e.what();
      } catch (...) {
      }
      manifest.save(run_dir);
    }
    throw;
  }
}

struct TestArgs {
  std::string run, workspace, suite, out, config, browser, image;
  int round = -1;
  std::size_t parallelism = 0;
  int step_budget = 0;
  int base_port = 0;
  GatewayFlags gateway;
};

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream&) {
  orchestrator::PipelineConfig config = load_config(a.config);
  if (a.parallelism > 0) config.parallelism = a.parallelism;
  if (a.step_budget > 0) config.step_budget = a.step_budget;
  if (a.base_port > 0) config.base_port = a.base_port;
  if (!a.browser.empty()) config.browser = a.browser;
  if (config.template_store.empty()) config.template_store = default_template_store();
  apply_gateway_flags(a.gateway, config);
  config.provider.apply_environment();
  config.validate();

  if (a.run.empty() == a.workspace.empty()) throw UsageError("give exactly one of --run or --workspace");
  const fs::path ws_dir = a.run.empty() ? fs::path(a.workspace) : fs::path(a.run) / "selected";
  fs::path suite_path = a.suite;
  if (suite_path.empty()) {
    if (a.run.empty()) throw UsageError("--suite is required with --workspace");
    suite_path = fs::path(a.run) / "suite.json";
  }
  if (!fs::exists(ws_dir)) throw UsageError(fmt::format("workspace {} does not exist", ws_dir.string()));
  if (!fs::exists(suite_path)) throw UsageError(fmt::format("suite file {} does not exist", suite_path.string()));
  const auto suite = testgen::load_suite(suite_path);
  if (suite.tests.empty()) throw UsageError("the suite has no test cases");
  const auto ws = workspace::Workspace::open(ws_dir);
  const fs::path out_path = a.out.empty() ? (a.run.empty() ? fs::path("feedback.json") : fs::path(a.run) / "feedback-test.json")
                                          : fs::path(a.out);

  auto gw = make_gateway(config);
  testrunner::RunnerOptions opts;
  opts.parallelism = config.parallelism;
  opts.step_budget = config.step_budget;
  opts.retry_bound = config.retry_bound;
  opts.base_port = config.base_port;
  opts.probe_timeout = config.probe_timeout;
  opts.browser = testrunner::make_browser_factory(config.browser);
  if (!a.image.empty()) {
    const auto img = testgen::UserRequest::load_image(a.image);
    if (img.format != "png") throw UsageError("the expected design image must be a PNG");
    opts.expected_image = img.bytes;
  }
  const util::PromptLibrary prompts = config.prompt_dir ? util::PromptLibrary(*config.prompt_dir) : util::PromptLibrary();
  testrunner::TestRunner runner(*gw, config.provider, prompts, opts);
  emit(out, "test_started", {{"workspace", ws_dir.string()}, {"tests", suite.tests.size()}});
  const auto bundle = runner.run_suite(ws, suite.tests, a.round < 0 ? 0 : a.round);
  testrunner::save_feedback(out_path, bundle);
  emit(out, "test_finished", {{"feedback", out_path.string()},
                              {"deployment_ok", bundle.deployment.ok},
                              {"yes", bundle.counts.yes},
                              {"partial", bundle.counts.partial},
                              {"no", bundle.counts.no},
                              {"pass_rate", orchestrator::tdd_pass_rate(bundle)}});
  return kExitOk;
}

struct EvaluateArgs {
  std::string records, out;
  std::vector<std::string> alignment;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.records.empty() && a.alignment.empty()) throw UsageError("give a records path and/or --alignment MANUAL AGENT");
  if (!a.records.empty()) {
    if (!fs::exists(a.records)) throw UsageError(fmt::format("records path {} does not exist", a.records));
    const auto load = eval::load_records(a.records);
    if (!load.errors.empty()) {
      for (const auto& e : load.errors) err << "record error: " << e << "\n";
      throw UsageError(fmt::format("{} record error(s); nothing written", load.errors.size()));
    }
    const auto report = eval::emit_report(load.records);
    const fs::path dir = a.out.empty() ? fs::path(".") : fs::path(a.out);
    eval::write_report(report, dir);
    out << report.text;
    emit(out, "report_written", {{"json", (dir / "report.json").string()}, {"text", (dir / "report.txt").string()}});
  }
  if (!a.alignment.empty()) {
    const auto manual = eval::load_verdicts(a.alignment.at(0));
    const auto agent = eval::load_verdicts(a.alignment.at(1));
    const auto result = eval::alignment_rate(eval::pair_verdicts(agent, manual));
    out << eval::render_alignment(result);
    emit(out, "alignment", result.to_json());
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Turns a requirement description into a tested web application."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate tests, develop the app and refine it against them");
  g->add_option("--desc", gen.desc, "Requirement text");
  g->add_option("--desc-file", gen.desc_file, "File holding the requirement text");
  g->add_option("--image", gen.image, "Design image (png, jpeg, webp, gif)");
  g->add_option("--max-iter", gen.max_iter, "Test-and-refine cycles; 0 disables testing")->check(CLI::NonNegativeNumber);
  g->add_option("--parallelism", gen.parallelism, "App instances tested at once")->check(CLI::PositiveNumber);
  g->add_option("--testgen", gen.testgen, "Test generation mode")->check(CLI::IsMember({"multi-step", "straightforward"}));
  g->add_option("--template-store", gen.template_store, "Directory of starter templates");
  g->add_option("--config", gen.config, "JSON config file");
  g->add_option("--out", gen.out, "Run directory (default runs/<run id>)");
  g->add_option("--browser", gen.browser, "Browser driver")->check(CLI::IsMember({"auto", "http", "cdp"}));
  g->add_option("--prompt-dir", gen.prompt_dir, "Directory overriding built-in prompt templates");
  g->add_option("--base-port", gen.base_port, "First port tried for app instances");
  add_gateway_flags(*g, gen.gateway);

  TestArgs test;
  auto* t = app.add_subcommand("test", "Run a test suite once against a workspace");
  t->add_option("--run", test.run, "Run directory (tests its selected workspace with its suite)");
  t->add_option("--workspace", test.workspace, "Workspace directory");
  t->add_option("--suite", test.suite, "Suite file");
  t->add_option("--out", test.out, "Feedback bundle file to write");
  t->add_option("--config", test.config, "JSON config file");
  t->add_option("--browser", test.browser, "Browser driver")->check(CLI::IsMember({"auto", "http", "cdp"}));
  t->add_option("--image", test.image, "Expected design image (png)");
  t->add_option("--round", test.round, "Round number recorded in the bundle");
  t->add_option("--parallelism", test.parallelism, "App instances tested at once")->check(CLI::PositiveNumber);
  t->add_option("--step-budget", test.step_budget, "Model decisions per test step")->check(CLI::PositiveNumber);
  t->add_option("--base-port", test.base_port, "First port tried for app instances");
  add_gateway_flags(*t, test.gateway);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compute accuracy and alignment reports");
  e->add_option("records", ev.records, "Records file or directory");
  e->add_option("--out", ev.out, "Directory for report.json and report.txt");
  e->add_option("--alignment", ev.alignment, "Manual and agent verdict files")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_test(test, out, err);
    return cmd_evaluate(ev, out, err);
  } catch (...) {
    return report_failure(std::current_exception(), out, err);
  }
}

}  // namespace appforge::cli

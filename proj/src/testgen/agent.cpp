#include "appforge/testgen/agent.hpp"

#include "appforge/util/text.hpp"

#include <fmt/format.h>

#include <atomic>
#include <set>
#include <thread>

namespace appforge::testgen {

StageError::StageError(std::string stage, std::exception_ptr cause, const std::string& what)
    : Error(fmt::format("{} stage failed: {}", stage, what)), stage_(std::move(stage)), cause_(std::move(cause)) {}

std::string test_id_for(const std::string& requirement_id) { return "T-" + requirement_id; }

namespace {

std::string text_field(const nlohmann::json& j, const char* key, bool required) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) {
    if (required) throw SchemaError(fmt::format("missing field '{}'", key));
    return {};
  }
  if (!j[key].is_string()) throw SchemaError(fmt::format("field '{}' must be a string", key));
  return util::trim(j[key].get<std::string>());
}

Requirement parse_requirement_item(const nlohmann::json& item) {
  if (!item.is_object()) throw SchemaError("each requirement must be a JSON object");
  Requirement r;
  r.id = text_field(item, "id", false);
  r.statement = util::collapse_whitespace(text_field(item, "statement", true));
  if (r.statement.empty()) throw SchemaError("requirement statement is empty");
  const auto kind = text_field(item, "kind", false);
  r.kind = kind.empty() ? RequirementKind::functionality : requirement_kind_from_string(kind);
  const auto origin = text_field(item, "origin", false);
  r.origin = origin.empty() ? Origin::stated : origin_from_string(origin);
  return r;
}

// Keeps model ids when every one is present and distinct; otherwise
// renumbers R1..Rn in order.
void assign_ids(std::vector<Requirement>& reqs) {
  std::set<std::string> seen;
  bool usable = true;
  for (const auto& r : reqs) usable = usable && !r.id.empty() && seen.insert(r.id).second;
  if (usable) return;
  for (std::size_t i = 0; i < reqs.size(); ++i) reqs[i].id = fmt::format("R{}", i + 1);
}

std::vector<TestStep> parse_steps(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
    throw SchemaError("test case needs a 'steps' array");
  std::vector<TestStep> steps;
  for (const auto& s : j["steps"]) {
    if (!s.is_object()) throw SchemaError("each step must be a JSON object");
    TestStep step;
    step.index = static_cast<int>(steps.size() + 1);
    step.action = text_field(s, "action", true);
    step.expected = text_field(s, "expected", true);
    steps.push_back(std::move(step));
  }
  return steps;
}

template <typename Fn>
gateway::Validator validator_for(Fn parse) {
  return [parse](const gateway::ParsedDocument& doc) -> std::optional<std::string> {
    try {
      parse(doc.json);
      return std::nullopt;
    } catch (const SchemaError& e) {
      return std::string(e.what());
    }
  };
}

std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

std::vector<Requirement> parse_requirements(const nlohmann::json& reply) {
  if (!reply.is_array()) throw SchemaError("expected a JSON array of requirements");
  std::vector<Requirement> reqs;
  for (const auto& item : reply) reqs.push_back(parse_requirement_item(item));
  assign_ids(reqs);
  return reqs;
}

DetailedRequirement parse_detailed(const nlohmann::json& reply, const Requirement& req) {
  if (!reply.is_object()) throw SchemaError("expected a JSON object");
  DetailedRequirement d;
  d.requirement_id = req.id;
  auto or_none = [](std::string s) { return s.empty() ? std::string(kNoneMarker) : s; };
  d.functional_spec = or_none(text_field(reply, "functional_spec", true));
  d.static_ui_spec = or_none(text_field(reply, "static_ui_spec", true));
  d.interaction_spec = or_none(text_field(reply, "interaction_spec", true));
  // Layout items are static by definition.
  if (req.kind == RequirementKind::layout_constraint) d.interaction_spec = kNoneMarker;
  if (reply.contains("data_sources") && !reply["data_sources"].is_null()) {
    if (!reply["data_sources"].is_array()) throw SchemaError("'data_sources' must be an array");
    for (const auto& s : reply["data_sources"]) d.data_sources.push_back(data_source_from_json(s));
  }
  return d;
}

SoapOperaTestCase parse_test_case(const nlohmann::json& reply, const Requirement& req) {
  if (!reply.is_object()) throw SchemaError("expected a JSON object");
  SoapOperaTestCase t;
  t.id = test_id_for(req.id);
  t.requirement_id = req.id;
  if (!reply.contains("persona") || !reply["persona"].is_object()) throw SchemaError("test case needs a persona");
  t.persona.name = text_field(reply["persona"], "name", true);
  t.persona.goal = text_field(reply["persona"], "goal", true);
  if (t.persona.goal.empty()) throw SchemaError("persona goal is empty");
  const auto category = text_field(reply, "category", false);
  t.category = category.empty() ? TestCategory::functionality : test_category_from_string(category);
  t.steps = parse_steps(reply);
  validate(t);
  return t;
}

Suite parse_straightforward(const nlohmann::json& reply) {
  if (!reply.is_array()) throw SchemaError("expected a JSON array of requirement/test-case pairs");
  Suite suite;
  suite.mode = TestgenMode::straightforward;
  std::vector<const nlohmann::json*> cases;
  for (const auto& item : reply) {
    if (!item.is_object() || !item.contains("requirement") || !item.contains("test_case"))
      throw SchemaError("each entry needs 'requirement' and 'test_case'");
    suite.requirements.push_back(parse_requirement_item(item["requirement"]));
    cases.push_back(&item["test_case"]);
  }
  assign_ids(suite.requirements);
  for (std::size_t i = 0; i < cases.size(); ++i)
    suite.tests.push_back(parse_test_case(*cases[i], suite.requirements[i]));
  if (suite.requirements.empty()) throw EmptyDecomposition();
  return suite;
}

TestGenerator::TestGenerator(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts,
                             TestgenOptions options)
    : gateway_(gateway), config_(std::move(config)), prompts_(std::move(prompts)), options_(options) {
  if (options_.concurrency == 0) options_.concurrency = 1;
}

gateway::PromptBundle TestGenerator::bundle(const std::string& prompt, const std::vector<std::pair<std::string, std::string>>& vars,
                                            gateway::Grammar grammar, const UserRequest* request) const {
  const auto parts = prompts_.parts(prompt);
  gateway::PromptBundle b;
  b.system = parts.system;
  b.grammar = grammar;
  b.add_text(util::render_template(parts.user, vars));
  if (request && request->design_image) b.add_image(*request->design_image);
  return b;
}

namespace {
std::string image_note(const UserRequest& request) {
  return request.design_image ? "\nA design image is attached. Treat its layout and visual design as requirements.\n"
                              : "";
}
}  // namespace

std::vector<Requirement> TestGenerator::decompose_requirements(const UserRequest& request) {
  request.validate();
  const auto b = bundle("testgen_decompose", {{"description", request.description}, {"image_note", image_note(request)}},
                        gateway::Grammar::json_array, &request);
  const auto doc = gateway_.complete_structured(b, config_, validator_for([](const nlohmann::json& j) {
                                                  parse_requirements(j);
                                                }));
  auto reqs = parse_requirements(doc.json);
  if (reqs.empty()) throw EmptyDecomposition();
  return reqs;
}

DetailedRequirement TestGenerator::elaborate(const Requirement& req, const UserRequest& request,
                                             const std::vector<Requirement>& all) {
  std::string listing;
  for (const auto& r : all.empty() ? std::vector<Requirement>{req} : all)
    listing += fmt::format("- [{}] ({}) {}\n", r.id, to_string(r.kind), r.statement);
  const auto b = bundle("testgen_elaborate",
                        {{"description", request.description},
                         {"requirement_list", listing},
                         {"requirement_id", req.id},
                         {"requirement_kind", std::string(to_string(req.kind))},
                         {"requirement_statement", req.statement}},
                        gateway::Grammar::json_object, nullptr);
  const auto doc =
      gateway_.complete_structured(b, config_, validator_for([&req](const nlohmann::json& j) { parse_detailed(j, req); }));
  return parse_detailed(doc.json, req);
}

SoapOperaTestCase TestGenerator::generate_test_case(const DetailedRequirement& detailed, const Requirement& req) {
  nlohmann::json spec = to_json(detailed);
  spec.erase("requirement_id");
  const auto b = bundle("testgen_testcase",
                        {{"requirement_id", req.id},
                         {"requirement_statement", req.statement},
                         {"detailed_spec", spec.dump(2)}},
                        gateway::Grammar::json_object, nullptr);
  const auto doc = gateway_.complete_structured(
      b, config_, validator_for([&req](const nlohmann::json& j) { parse_test_case(j, req); }));
  return parse_test_case(doc.json, req);
}

Suite TestGenerator::generate_straightforward(const UserRequest& request) {
  request.validate();
  const auto b =
      bundle("testgen_straightforward", {{"description", request.description}, {"image_note", image_note(request)}},
             gateway::Grammar::json_array, &request);
  const auto doc = gateway_.complete_structured(b, config_, validator_for([](const nlohmann::json& j) {
                                                  if (j.is_array() && j.empty()) return;
                                                  parse_straightforward(j);
                                                }));
  return parse_straightforward(doc.json);
}

Suite TestGenerator::generate_suite(const UserRequest& request) {
  if (options_.mode == TestgenMode::straightforward) {
    try {
      return generate_straightforward(request);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("straightforward-generation", std::current_exception(), e.what());
    }
  }

  Suite suite;
  suite.mode = TestgenMode::multi_step;
  try {
    suite.requirements = decompose_requirements(request);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("decomposition", std::current_exception(), e.what());
  }

  const std::size_t n = suite.requirements.size();
  suite.detailed.resize(n);
  suite.tests.resize(n);
  struct Failure {
    std::string stage;
    std::exception_ptr error;
  };
  std::vector<std::optional<Failure>> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& req = suite.requirements[i];
      std::string stage = "elaboration";
      try {
        suite.detailed[i] = elaborate(req, request, suite.requirements);
        stage = "test-case-generation";
        suite.tests[i] = generate_test_case(suite.detailed[i], req);
      } catch (...) {
        failures[i] = Failure{stage, std::current_exception()};
      }
    }
  };
  const std::size_t threads = std::min(options_.concurrency, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Report the earliest requirement's failure so the outcome does not depend
  // on scheduling.
  for (const auto& f : failures) {
    if (f) throw StageError(f->stage, f->error, describe(f->error));
  }
  suite.validate();
  return suite;
}

}  // namespace appforge::testgen

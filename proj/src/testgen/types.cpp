#include "appforge/testgen/types.hpp"

#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include <fmt/format.h>

#include <set>

namespace appforge::testgen {

void UserRequest::validate() const {
  if (util::trim(description).empty()) throw UsageError("request description is empty");
  if (design_image && design_image->bytes.empty()) throw UsageError("design image is empty");
}

gateway::ImageAttachment UserRequest::load_image(const std::filesystem::path& path) {
  auto ext = util::to_lower(path.extension().string());
  if (!ext.empty()) ext.erase(0, 1);
  if (ext == "jpg") ext = "jpeg";
  if (ext != "png" && ext != "jpeg" && ext != "webp" && ext != "gif")
    throw UsageError(fmt::format("{}: unsupported image format (png, jpeg, webp, gif)", path.string()));
  if (!std::filesystem::is_regular_file(path)) throw UsageError(fmt::format("{}: no such image file", path.string()));
  const std::string data = util::read_file(path);
  return {ext, std::vector<std::uint8_t>(data.begin(), data.end())};
}

std::string_view to_string(RequirementKind k) {
  switch (k) {
    case RequirementKind::functionality: return "functionality";
    case RequirementKind::layout_constraint: return "layout-constraint";
    case RequirementKind::design_element: return "design-element";
  }
  return "functionality";
}

std::string_view to_string(Origin o) { return o == Origin::stated ? "explicit" : "inferred"; }

std::string_view to_string(DataSourceKind k) {
  switch (k) {
    case DataSourceKind::inline_dataset: return "inline-dataset";
    case DataSourceKind::database: return "database";
    case DataSourceKind::external_api: return "external-api";
  }
  return "inline-dataset";
}

std::string_view to_string(TestCategory c) {
  switch (c) {
    case TestCategory::functionality: return "functionality";
    case TestCategory::data_display: return "data-display";
    case TestCategory::design_validation: return "design-validation";
  }
  return "functionality";
}

std::string_view to_string(TestgenMode m) { return m == TestgenMode::multi_step ? "multi-step" : "straightforward"; }

RequirementKind requirement_kind_from_string(std::string_view s) {
  for (auto k : {RequirementKind::functionality, RequirementKind::layout_constraint, RequirementKind::design_element})
    if (to_string(k) == s) return k;
  throw SchemaError(fmt::format("unknown requirement kind '{}'", s));
}

Origin origin_from_string(std::string_view s) {
  if (s == "explicit") return Origin::stated;
  if (s == "inferred") return Origin::inferred;
  throw SchemaError(fmt::format("unknown requirement origin '{}'", s));
}

DataSourceKind data_source_kind_from_string(std::string_view s) {
  for (auto k : {DataSourceKind::inline_dataset, DataSourceKind::database, DataSourceKind::external_api})
    if (to_string(k) == s) return k;
  throw SchemaError(fmt::format("unknown data source kind '{}'", s));
}

TestCategory test_category_from_string(std::string_view s) {
  for (auto c : {TestCategory::functionality, TestCategory::data_display, TestCategory::design_validation})
    if (to_string(c) == s) return c;
  throw SchemaError(fmt::format("unknown test category '{}'", s));
}

TestgenMode testgen_mode_from_string(std::string_view s) {
  if (s == "multi-step") return TestgenMode::multi_step;
  if (s == "straightforward") return TestgenMode::straightforward;
  throw UsageError(fmt::format("unknown test generation mode '{}' (multi-step|straightforward)", s));
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(fmt::format("field '{}' has the wrong type", key));
  }
}

}  // namespace

nlohmann::json to_json(const Requirement& r) {
  return {{"id", r.id}, {"statement", r.statement}, {"kind", to_string(r.kind)}, {"origin", to_string(r.origin)}};
}

nlohmann::json to_json(const DataSourceSpec& d) {
  nlohmann::json j{{"kind", to_string(d.kind)}};
  switch (d.kind) {
    case DataSourceKind::inline_dataset: j["content"] = d.content; break;
    case DataSourceKind::database:
      j["schema"] = d.schema;
      j["setup"] = d.setup;
      break;
    case DataSourceKind::external_api:
      j["endpoint"] = d.endpoint;
      j["placeholder"] = d.placeholder;
      break;
  }
  return j;
}

nlohmann::json to_json(const DetailedRequirement& d) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : d.data_sources) sources.push_back(to_json(s));
  return {{"requirement_id", d.requirement_id},
          {"functional_spec", d.functional_spec},
          {"static_ui_spec", d.static_ui_spec},
          {"interaction_spec", d.interaction_spec},
          {"data_sources", sources}};
}

nlohmann::json to_json(const SoapOperaTestCase& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back({{"index", s.index}, {"action", s.action}, {"expected", s.expected}});
  return {{"id", t.id},
          {"requirement_id", t.requirement_id},
          {"persona", {{"name", t.persona.name}, {"goal", t.persona.goal}}},
          {"category", to_string(t.category)},
          {"steps", steps}};
}

nlohmann::json to_json(const Suite& s) {
  nlohmann::json j{{"schema", kSuiteSchema}, {"mode", to_string(s.mode)}};
  auto& reqs = j["requirements"] = nlohmann::json::array();
  for (const auto& r : s.requirements) reqs.push_back(to_json(r));
  auto& detailed = j["detailed_requirements"] = nlohmann::json::array();
  for (const auto& d : s.detailed) detailed.push_back(to_json(d));
  auto& tests = j["test_cases"] = nlohmann::json::array();
  for (const auto& t : s.tests) tests.push_back(to_json(t));
  return j;
}

Requirement requirement_from_json(const nlohmann::json& j) {
  Requirement r;
  r.id = field<std::string>(j, "id");
  r.statement = field<std::string>(j, "statement");
  r.kind = requirement_kind_from_string(field<std::string>(j, "kind"));
  r.origin = origin_from_string(field<std::string>(j, "origin"));
  if (r.id.empty()) throw SchemaError("requirement id is empty");
  if (util::trim(r.statement).empty()) throw SchemaError(fmt::format("requirement {} has an empty statement", r.id));
  return r;
}

void validate(const DataSourceSpec& d) {
  if (d.kind == DataSourceKind::database && util::trim(d.schema).empty())
    throw SchemaError("database data source has no schema");
  if (d.kind == DataSourceKind::external_api && util::trim(d.endpoint).empty())
    throw SchemaError("external-api data source has no endpoint descriptor");
}

DataSourceSpec data_source_from_json(const nlohmann::json& j) {
  DataSourceSpec d;
  d.kind = data_source_kind_from_string(field<std::string>(j, "kind"));
  switch (d.kind) {
    case DataSourceKind::inline_dataset: d.content = j.contains("content") ? j["content"] : nlohmann::json(); break;
    case DataSourceKind::database:
      d.schema = field<std::string>(j, "schema");
      d.setup = j.value("setup", "");
      break;
    case DataSourceKind::external_api:
      d.endpoint = field<std::string>(j, "endpoint");
      d.placeholder = field<bool>(j, "placeholder");
      break;
  }
  validate(d);
  return d;
}

DetailedRequirement detailed_from_json(const nlohmann::json& j) {
  DetailedRequirement d;
  d.requirement_id = field<std::string>(j, "requirement_id");
  d.functional_spec = field<std::string>(j, "functional_spec");
  d.static_ui_spec = field<std::string>(j, "static_ui_spec");
  d.interaction_spec = field<std::string>(j, "interaction_spec");
  for (const auto& s : field<nlohmann::json>(j, "data_sources")) d.data_sources.push_back(data_source_from_json(s));
  return d;
}

void validate(const SoapOperaTestCase& t) {
  if (t.steps.empty()) throw SchemaError(fmt::format("test case {} has no steps", t.id));
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.index != static_cast<int>(i + 1))
      throw SchemaError(fmt::format("test case {}: step indices are not contiguous from 1", t.id));
    if (util::trim(s.action).empty() || util::trim(s.expected).empty())
      throw SchemaError(fmt::format("test case {}: step {} needs an action and an expectation", t.id, s.index));
  }
}

SoapOperaTestCase test_case_from_json(const nlohmann::json& j) {
  SoapOperaTestCase t;
  t.id = field<std::string>(j, "id");
  t.requirement_id = field<std::string>(j, "requirement_id");
  const auto persona = field<nlohmann::json>(j, "persona");
  t.persona.name = field<std::string>(persona, "name");
  t.persona.goal = field<std::string>(persona, "goal");
  t.category = test_category_from_string(field<std::string>(j, "category"));
  for (const auto& s : field<nlohmann::json>(j, "steps")) {
    t.steps.push_back({field<int>(s, "index"), field<std::string>(s, "action"), field<std::string>(s, "expected")});
  }
  validate(t);
  return t;
}

Suite suite_from_json(const nlohmann::json& j) {
  const auto schema = j.is_object() ? j.value("schema", "") : std::string();
  if (schema != kSuiteSchema)
    throw SchemaError(fmt::format("unsupported suite schema '{}' (expected {})", schema, kSuiteSchema));
  Suite s;
  s.mode = testgen_mode_from_string(field<std::string>(j, "mode"));
  for (const auto& r : field<nlohmann::json>(j, "requirements")) s.requirements.push_back(requirement_from_json(r));
  for (const auto& d : field<nlohmann::json>(j, "detailed_requirements")) s.detailed.push_back(detailed_from_json(d));
  for (const auto& t : field<nlohmann::json>(j, "test_cases")) s.tests.push_back(test_case_from_json(t));
  s.validate();
  return s;
}

void Suite::validate() const {
  std::set<std::string> req_ids;
  for (const auto& r : requirements) {
    if (!req_ids.insert(r.id).second) throw SchemaError(fmt::format("duplicate requirement id {}", r.id));
  }
  for (const auto& d : detailed) {
    if (!req_ids.contains(d.requirement_id))
      throw SchemaError(fmt::format("detailed requirement references unknown id {}", d.requirement_id));
  }
  std::set<std::string> covered;
  std::set<std::string> test_ids;
  for (const auto& t : tests) {
    testgen::validate(t);
    if (!test_ids.insert(t.id).second) throw SchemaError(fmt::format("duplicate test id {}", t.id));
    if (!req_ids.contains(t.requirement_id))
      throw SchemaError(fmt::format("test {} references unknown requirement {}", t.id, t.requirement_id));
    if (!covered.insert(t.requirement_id).second)
      throw SchemaError(fmt::format("requirement {} has more than one test case", t.requirement_id));
  }
  if (covered.size() != req_ids.size()) throw SchemaError("some requirements have no test case");
}

Suite load_suite(const std::filesystem::path& path) { return suite_from_json(util::read_json(path)); }

void save_suite(const std::filesystem::path& path, const Suite& suite) { util::write_json(path, to_json(suite)); }

}  // namespace appforge::testgen

#pragma once

#include "appforge/gateway/types.hpp"
#include "appforge/util/errors.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace appforge::testgen {

// Marker written into specification fields that do not apply.
inline constexpr const char* kNoneMarker = "none";
inline constexpr const char* kSuiteSchema = "appforge.suite/1";

struct UserRequest {
  std::string description;
  std::optional<gateway::ImageAttachment> design_image;

  // Throws UsageError when the description is blank.
  void validate() const;
  // Image format is taken from the file extension.
  static gateway::ImageAttachment load_image(const std::filesystem::path& path);
};

enum class RequirementKind { functionality, layout_constraint, design_element };
enum class Origin { stated, inferred };  // serialized "explicit" / "inferred"

struct Requirement {
  std::string id;
  std::string statement;
  RequirementKind kind = RequirementKind::functionality;
  Origin origin = Origin::stated;
};

enum class DataSourceKind { inline_dataset, database, external_api };

struct DataSourceSpec {
  DataSourceKind kind = DataSourceKind::inline_dataset;
  nlohmann::json content;    // inline-dataset
  std::string schema;        // database
  std::string setup;         // database
  std::string endpoint;      // external-api
  bool placeholder = false;  // external-api
};

struct DetailedRequirement {
  std::string requirement_id;
  std::string functional_spec;
  std::string static_ui_spec;
  std::string interaction_spec;
  std::vector<DataSourceSpec> data_sources;
};

enum class TestCategory { functionality, data_display, design_validation };

struct Persona {
  std::string name;
  std::string goal;
};

struct TestStep {
  int index = 1;
  std::string action;
  std::string expected;
};

struct SoapOperaTestCase {
  std::string id;
  std::string requirement_id;
  Persona persona;
  std::vector<TestStep> steps;
  TestCategory category = TestCategory::functionality;
};

enum class TestgenMode { multi_step, straightforward };

struct Suite {
  TestgenMode mode = TestgenMode::multi_step;
  std::vector<Requirement> requirements;
  std::vector<DetailedRequirement> detailed;
  std::vector<SoapOperaTestCase> tests;

  // Throws SchemaError when the test <-> requirement bijection or any
  // per-record invariant is broken.
  void validate() const;
};

// A document that does not follow the interchange schema.
class SchemaError : public UsageError {
 public:
  using UsageError::UsageError;
};

std::string_view to_string(RequirementKind k);
std::string_view to_string(Origin o);
std::string_view to_string(DataSourceKind k);
std::string_view to_string(TestCategory c);
std::string_view to_string(TestgenMode m);
RequirementKind requirement_kind_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);
DataSourceKind data_source_kind_from_string(std::string_view s);
TestCategory test_category_from_string(std::string_view s);
TestgenMode testgen_mode_from_string(std::string_view s);

// Interchange serialization. The from_json functions are strict: missing
// fields or unknown enum values throw SchemaError.
nlohmann::json to_json(const Requirement& r);
nlohmann::json to_json(const DataSourceSpec& d);
nlohmann::json to_json(const DetailedRequirement& d);
nlohmann::json to_json(const SoapOperaTestCase& t);
nlohmann::json to_json(const Suite& s);
Requirement requirement_from_json(const nlohmann::json& j);
DataSourceSpec data_source_from_json(const nlohmann::json& j);
DetailedRequirement detailed_from_json(const nlohmann::json& j);
SoapOperaTestCase test_case_from_json(const nlohmann::json& j);
// Rejects documents whose "schema" is not kSuiteSchema.
Suite suite_from_json(const nlohmann::json& j);

void validate(const DataSourceSpec& d);
void validate(const SoapOperaTestCase& t);

Suite load_suite(const std::filesystem::path& path);
void save_suite(const std::filesystem::path& path, const Suite& suite);

}  // namespace appforge::testgen

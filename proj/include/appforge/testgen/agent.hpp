#pragma once

#include "appforge/gateway/gateway.hpp"
#include "appforge/testgen/types.hpp"
#include "appforge/util/prompts.hpp"

#include <exception>

namespace appforge::testgen {

class EmptyDecomposition : public Error {
 public:
  EmptyDecomposition() : Error("model returned no requirements") {}
};

// A failure inside generate_suite, tagged with the stage that raised it:
// "decomposition", "elaboration", "test-case-generation" or
// "straightforward-generation". The original exception is kept in cause().
class StageError : public Error {
 public:
  StageError(std::string stage, std::exception_ptr cause, const std::string& what);
  const std::string& stage() const { return stage_; }
  std::exception_ptr cause() const { return cause_; }
  // Throws the original exception.
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

struct TestgenOptions {
  TestgenMode mode = TestgenMode::multi_step;
  // Requirements elaborated at once.
  std::size_t concurrency = 4;
};

class TestGenerator {
 public:
  TestGenerator(gateway::Gateway& gateway, gateway::ProviderConfig config, util::PromptLibrary prompts = {},
                TestgenOptions options = {});

  std::vector<Requirement> decompose_requirements(const UserRequest& request);

  // `all` is the full requirement list, shown to the model read-only so
  // elaborations stay consistent with one another.
  DetailedRequirement elaborate(const Requirement& req, const UserRequest& request,
                                const std::vector<Requirement>& all = {});

  SoapOperaTestCase generate_test_case(const DetailedRequirement& detailed, const Requirement& req);

  // Runs the configured mode end to end. Errors come out as StageError.
  Suite generate_suite(const UserRequest& request);

  // Single call from the request to requirement/test-case pairs.
  Suite generate_straightforward(const UserRequest& request);

 private:
  gateway::PromptBundle bundle(const std::string& prompt, const std::vector<std::pair<std::string, std::string>>& vars,
                               gateway::Grammar grammar, const UserRequest* request) const;

  gateway::Gateway& gateway_;
  gateway::ProviderConfig config_;
  util::PromptLibrary prompts_;
  TestgenOptions options_;
};

// Reply parsers, exposed for tests. They throw SchemaError on bad input.
std::vector<Requirement> parse_requirements(const nlohmann::json& reply);
DetailedRequirement parse_detailed(const nlohmann::json& reply, const Requirement& req);
SoapOperaTestCase parse_test_case(const nlohmann::json& reply, const Requirement& req);
Suite parse_straightforward(const nlohmann::json& reply);

std::string test_id_for(const std::string& requirement_id);

}  // namespace appforge::testgen

#include "fake_model.hpp"

#include "appforge/util/text.hpp"

#include <algorithm>
#include <regex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace appforge::testing {

namespace {

bool starts(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

std::string capture(const std::string& text, const std::regex& re, int group = 1) {
  std::smatch m;
  return std::regex_search(text, m, re) ? m[group].str() : std::string();
}

std::string between(const std::string& text, const std::string& open, const std::vector<std::string>& closes) {
  const auto a = text.find(open);
  if (a == std::string::npos) return {};
  const auto from = a + open.size();
  std::size_t to = text.size();
  for (const auto& c : closes) to = std::min(to, text.find(c, from) == std::string::npos ? text.size() : text.find(c, from));
  return text.substr(from, to - from);
}

nlohmann::json test_case_for(const std::string& id) {
  return {{"persona", {{"name", "Dana"}, {"goal", "Confirm that " + id + " is delivered"}}},
          {"category", "functionality"},
          {"steps", {{{"action", "Open the home page"}, {"expected", "The page shows done:" + id}}}}};
}

std::string statement_for(const std::string& id) {
  return fmt::format("The home page confirms feature {}.", id);
}

}  // namespace

Stage classify(const gateway::PromptBundle& b) {
  const auto& s = b.system;
  if (starts(s, "You are a requirements engineer. You turn")) return Stage::decompose;
  if (starts(s, "You are a requirements engineer. You enrich")) return Stage::elaborate;
  if (starts(s, "You are a QA engineer who writes soap opera")) return Stage::testcase;
  if (starts(s, "You are an expert AI Product Manager")) return Stage::straightforward;
  if (starts(s, "You are a software architect")) return Stage::template_select;
  if (starts(s, "You are a software engineer working on a project.")) {
    return s.find("protected") != std::string::npos ? Stage::develop : Stage::context_select;
  }
  if (s.find("carry out one test step") != std::string::npos) return Stage::driver;
  if (s.find("judge whether a test step") != std::string::npos) return Stage::driver_decision;
  if (starts(s, "You check freshly launched")) return Stage::crash_check;
  if (starts(s, "You are a UI reviewer")) return Stage::visual_discrepancy;
  if (starts(s, "You are an expert web designer")) return Stage::visual_similarity;
  return Stage::unknown;
}

std::string fixture_page(const std::vector<std::string>& done) {
  std::string items;
  for (const auto& id : done) items += fmt::format("    <li>done:{}</li>\n", id);
  return "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n  <meta charset=\"utf-8\">\n  <title>Fixture App</title>\n"
         "</head>\n<body>\n  <h1>Fixture App</h1>\n  <ul>\n" +
         items + "  </ul>\n  <a href=\"/index.html\">Home</a>\n</body>\n</html>\n";
}

std::vector<std::string> done_markers(const std::string& text) {
  static const std::regex marker(R"(done:(R\d+))");
  std::vector<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), marker), end; it != end; ++it)
    if (std::find(out.begin(), out.end(), (*it)[1].str()) == out.end()) out.push_back((*it)[1].str());
  return out;
}

FakeModel::FakeModel(FakeWorld world) : world_(std::move(world)) {}

std::string FakeModel::reply(const gateway::PromptBundle& b) {
  const Stage stage = classify(b);
  ++calls_[static_cast<std::size_t>(stage)];
  if (intercept)
    if (auto r = intercept(stage, b)) return *r;
  const std::string user = b.user_text();

  switch (stage) {
    case Stage::decompose: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& id : world_.requirement_ids)
        arr.push_back({{"id", id}, {"statement", statement_for(id)}, {"kind", "functionality"}, {"origin", "explicit"}});
      return arr.dump(2);
    }
    case Stage::elaborate: {
      const auto id = capture(user, std::regex(R"(Requirement to elaborate: \[([^\]]+)\])"));
      return nlohmann::json{{"functional_spec", "The home page lists the marker done:" + id + "."},
                            {"static_ui_spec", "One list item holding the marker."},
                            {"interaction_spec", "none"},
                            {"data_sources", nlohmann::json::array()}}
          .dump(2);
    }
    case Stage::testcase: {
      const auto id = capture(user, std::regex(R"(Requirement \[([^\]]+)\])"));
      return test_case_for(id).dump(2);
    }
    case Stage::straightforward: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& id : world_.requirement_ids)
        arr.push_back({{"requirement",
                        {{"id", id}, {"statement", statement_for(id)}, {"kind", "functionality"}, {"origin", "explicit"}}},
                       {"test_case", test_case_for(id)}});
      return arr.dump(2);
    }
    case Stage::template_select:
      return world_.template_id;
    case Stage::context_select:
      return "<contextSelection>\n  <includeFile path=\"index.html\"/>\n</contextSelection>";
    case Stage::develop: {
      const auto current = between(user, "<file filePath=\"index.html\">", {"</file>"});
      auto done = done_markers(current);
      // Only the current instructions matter, not the chat history.
      const auto instructions = between(user, "based on the instructions:\n", {"\n\nResponse format:"});
      std::vector<std::string> wanted;
      if (instructions.find("Requirements to implement:") != std::string::npos) {
        for (int i = 0; i < world_.initial && i < static_cast<int>(world_.requirement_ids.size()); ++i)
          wanted.push_back(world_.requirement_ids[static_cast<std::size_t>(i)]);
      } else {
        static const std::regex failing(R"(- T-(R\d+) \()");
        int budget = world_.fixes_per_round;
        for (std::sregex_iterator it(instructions.begin(), instructions.end(), failing), end; it != end && budget > 0;
             ++it, --budget)
          wanted.push_back((*it)[1].str());
      }
      for (const auto& id : wanted)
        if (std::find(done.begin(), done.end(), id) == done.end()) done.push_back(id);
      std::sort(done.begin(), done.end());
      return "I will update the home page.\n\n<Action type=\"file\" filePath=\"index.html\">\n" + fixture_page(done) +
             "</Action>\n";
    }
    case Stage::driver:
    case Stage::driver_decision: {
      const auto action = capture(user, std::regex(R"(Action to perform: ([^\n]*))"));
      const auto expected = capture(user, std::regex(R"(Expected outcome: ([^\n]*))"));
      const auto history = between(user, "so far:\n", {"\n\nCurrent page:"});
      const auto page = between(user, "Current page:\n", {"\n\nChoose the next", "\n\nThe interaction limit"});
      if (stage == Stage::driver && world_.navigate_first && starts(history, "(nothing yet)") &&
          starts(action, "Open the home page"))
        return R"({"action": "navigate", "path": "/"})";
      const auto words = util::split_lines(util::replace_all(expected, " ", "\n"));
      const std::string token = words.empty() ? std::string() : words.back();
      if (!token.empty() && page.find(token) != std::string::npos)
        return nlohmann::json{{"action", "judge"}, {"verdict", "met"}, {"observed", "The page shows " + token}}.dump();
      return nlohmann::json{{"action", "judge"},
                            {"verdict", "unmet"},
                            {"observed", "The page does not show " + token},
                            {"category", "assertion-mismatch"},
                            {"recommendation", "Show " + token + " on the home page."}}
          .dump();
    }
    case Stage::crash_check:
      return R"({"crash": false, "evidence": ""})";
    case Stage::visual_discrepancy:
      return "No visible discrepancies.";
    case Stage::visual_similarity:
      return "The rendering follows the design closely.\n4";
    case Stage::unknown:
      break;
  }
  return "unrecognized prompt";
}

ScriptedProvider::Handler handler_for(std::shared_ptr<FakeModel> model) {
  return [model](const gateway::PromptBundle& b) { return model->reply(b); };
}

}  // namespace appforge::testing

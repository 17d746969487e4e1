#include "appforge/eval/metrics.hpp"

#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include <cmath>
#include <regex>
#include <set>

#include <fmt/format.h>

namespace appforge::eval {

void EvalVerdictCounts::add(Verdict v) {
  switch (v) {
    case Verdict::yes: ++yes; break;
    case Verdict::partial: ++partial; break;
    case Verdict::no: ++no; break;
  }
}

EvalVerdictCounts& EvalVerdictCounts::operator+=(const EvalVerdictCounts& o) {
  yes += o.yes;
  partial += o.partial;
  no += o.no;
  fail_to_start += o.fail_to_start;
  return *this;
}

double accuracy(const EvalVerdictCounts& c) {
  if (c.yes < 0 || c.partial < 0 || c.no < 0) throw UsageError("verdict counts must be non-negative");
  const auto total = c.total();
  if (total == 0) throw ZeroTotal();
  return (static_cast<double>(c.yes) + 0.5 * static_cast<double>(c.partial)) / static_cast<double>(total) * 100.0;
}

namespace {

void check_score(const std::optional<double>& s, const char* what, const std::string& app) {
  if (s && (!std::isfinite(*s) || *s < 1.0 || *s > 5.0))
    throw UsageError(fmt::format("{}: {} score {} is outside [1,5]", app, what, *s));
}

}  // namespace

void EvalRecord::validate() const {
  if (app_id.empty()) throw UsageError("record has no app id");
  check_score(appearance, "appearance", app_id);
  check_score(similarity, "similarity", app_id);
  std::set<std::string> ids;
  for (const auto& t : tests) {
    if (t.test_id.empty()) throw UsageError(fmt::format("{}: test without an id", app_id));
    if (!ids.insert(t.test_id).second) throw UsageError(fmt::format("{}: duplicate test id {}", app_id, t.test_id));
    if (started && !t.verdict) throw UsageError(fmt::format("{}: test {} has no verdict", app_id, t.test_id));
  }
}

Verdict EvalRecord::effective_verdict(const EvalTest& t) const {
  if (!started || !t.verdict) return Verdict::no;
  return *t.verdict;
}

nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.tests) {
    nlohmann::json j{{"test_id", t.test_id},
                     {"instruction_category", t.instruction_category},
                     {"test_category", t.test_category}};
    j["verdict"] = t.verdict ? nlohmann::json(std::string(testrunner::to_string(*t.verdict))) : nlohmann::json();
    tests.push_back(std::move(j));
  }
  nlohmann::json j{{"app_id", r.app_id}, {"started", r.started}, {"tests", tests}};
  j["appearance"] = r.appearance ? nlohmann::json(*r.appearance) : nlohmann::json();
  j["similarity"] = r.similarity ? nlohmann::json(*r.similarity) : nlohmann::json();
  return j;
}

namespace {

std::optional<double> optional_score(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw UsageError(fmt::format("'{}' must be a number", key));
  return j[key].get<double>();
}

std::string label(const nlohmann::json& t, const char* key) {
  if (!t.contains(key) || t[key].is_null()) return {};
  if (!t[key].is_string()) throw UsageError(fmt::format("'{}' must be a string", key));
  return t[key].get<std::string>();
}

}  // namespace

EvalRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("record must be a JSON object");
  EvalRecord r;
  try {
    r.app_id = j.at("app_id").get<std::string>();
    r.started = j.value("started", true);
    r.appearance = optional_score(j, "appearance");
    r.similarity = optional_score(j, "similarity");
    const auto& tests = j.at("tests");
    if (!tests.is_array()) throw UsageError("'tests' must be an array");
    for (const auto& t : tests) {
      if (!t.is_object()) throw UsageError("test entry must be an object");
      EvalTest et;
      et.test_id = t.at("test_id").get<std::string>();
      if (t.contains("verdict") && !t["verdict"].is_null())
        et.verdict = testrunner::verdict_from_string(t["verdict"].get<std::string>());
      et.instruction_category = label(t, "instruction_category");
      et.test_category = label(t, "test_category");
      r.tests.push_back(std::move(et));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(e.what());
  }
  r.validate();
  return r;
}

namespace {

void collect(const nlohmann::json& doc, const std::string& origin, RecordsLoad& out) {
  const nlohmann::json* list = &doc;
  if (doc.is_object() && doc.contains("records")) {
    if (doc.contains("schema") && doc["schema"] != kRecordsSchema) {
      out.errors.push_back(fmt::format("{}: unsupported schema {}", origin, doc["schema"].dump()));
      return;
    }
    list = &doc["records"];
  } else if (doc.is_object()) {
    try {
      out.records.push_back(record_from_json(doc));
    } catch (const std::exception& e) {
      out.errors.push_back(fmt::format("{}: {}", origin, e.what()));
    }
    return;
  }
  if (!list->is_array()) {
    out.errors.push_back(fmt::format("{}: expected an array of records", origin));
    return;
  }
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& item = (*list)[i];
    std::string who = fmt::format("{} record {}", origin, i + 1);
    if (item.is_object() && item.contains("app_id") && item["app_id"].is_string())
      who += fmt::format(" ({})", item["app_id"].get<std::string>());
    try {
      out.records.push_back(record_from_json(item));
    } catch (const std::exception& e) {
      out.errors.push_back(fmt::format("{}: {}", who, e.what()));
    }
  }
}

}  // namespace

RecordsLoad load_records(const std::filesystem::path& path) {
  RecordsLoad out;
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& rel : util::list_files(path))
      if (util::to_lower(std::filesystem::path(rel).extension().string()) == ".json") files.push_back(path / rel);
    if (files.empty()) out.errors.push_back(fmt::format("{}: no .json record files", path.string()));
  } else {
    files.push_back(path);
  }
  for (const auto& f : files) {
    nlohmann::json doc;
    try {
      doc = util::read_json(f);
    } catch (const std::exception& e) {
      out.errors.push_back(fmt::format("{}: {}", f.string(), e.what()));
      continue;
    }
    collect(doc, f.string(), out);
  }
  std::set<std::string> seen;
  for (const auto& r : out.records)
    if (!seen.insert(r.app_id).second) out.errors.push_back(fmt::format("duplicate app id {}", r.app_id));
  return out;
}

EvalVerdictCounts overall_counts(const std::vector<EvalRecord>& records) {
  EvalVerdictCounts c;
  for (const auto& r : records)
    for (const auto& t : r.tests) {
      c.add(r.effective_verdict(t));
      if (!r.started) ++c.fail_to_start;
    }
  return c;
}

namespace {

struct Tally {
  EvalVerdictCounts counts;
  std::set<std::string> apps;
  std::set<std::string> started;
};

void finish(std::map<std::string, Tally>& in, std::map<std::string, CategoryResult>& out) {
  for (auto& [name, t] : in) {
    CategoryResult r;
    r.counts = t.counts;
    r.apps = static_cast<int>(t.apps.size());
    r.started_apps = static_cast<int>(t.started.size());
    if (r.started_apps > 0) r.accuracy = accuracy(r.counts);
    out.emplace(name, r);
  }
}

}  // namespace

CategoryBreakdown category_accuracy(const std::vector<EvalRecord>& records) {
  std::map<std::string, Tally> instr, kind;
  for (const auto& r : records) {
    for (const auto& t : r.tests) {
      if (t.instruction_category.empty() || t.test_category.empty())
        throw UnlabeledTest(fmt::format("{}: test {} is missing a category label", r.app_id, t.test_id));
      const auto v = r.effective_verdict(t);
      for (auto* tally : {&instr[t.instruction_category], &kind[t.test_category]}) {
        tally->counts.add(v);
        if (!r.started) ++tally->counts.fail_to_start;
        tally->apps.insert(r.app_id);
        if (r.started) tally->started.insert(r.app_id);
      }
    }
  }
  CategoryBreakdown out;
  finish(instr, out.by_instruction);
  finish(kind, out.by_test_category);
  return out;
}

nlohmann::json AlignmentResult::to_json() const {
  nlohmann::json j{{"matched", matched},
                   {"total", total},
                   {"rate", rate},
                   {"restricted_matched", restricted_matched},
                   {"restricted_total", restricted_total},
                   {"notes", notes}};
  j["restricted_rate"] = restricted_rate ? nlohmann::json(*restricted_rate) : nlohmann::json();
  return j;
}

AlignmentResult alignment_rate(const AlignmentInput& input) {
  if (input.pairs.empty()) throw UsageError("alignment needs at least one test case");
  AlignmentResult r;
  for (const auto& p : input.pairs) {
    const bool match = p.agent == p.manual;
    ++r.total;
    if (match) ++r.matched;
    if (p.manual != Verdict::partial) {
      ++r.restricted_total;
      if (match) ++r.restricted_matched;
    }
  }
  r.rate = static_cast<double>(r.matched) / static_cast<double>(r.total) * 100.0;
  r.notes.push_back(fmt::format("full-set rate is the exact quotient {}/{} = {:.4f}% ({:.1f}% at one decimal)",
                                r.matched, r.total, r.rate, r.rate));
  if (r.restricted_total > 0) {
    r.restricted_rate = static_cast<double>(r.restricted_matched) / static_cast<double>(r.restricted_total) * 100.0;
  } else {
    r.notes.push_back("no case has a manual YES or NO verdict; the restricted rate is undefined");
  }
  return r;
}

std::map<std::string, Verdict> load_verdicts(const std::filesystem::path& path) {
  const auto doc = util::read_json(path);
  std::map<std::string, Verdict> out;
  auto put = [&](const std::string& id, const nlohmann::json& v) {
    if (!v.is_string()) throw UsageError(fmt::format("{}: verdict for {} must be a string", path.string(), id));
    if (!out.emplace(id, testrunner::verdict_from_string(v.get<std::string>())).second)
      throw UsageError(fmt::format("{}: duplicate test id {}", path.string(), id));
  };
  try {
    if (doc.is_object()) {
      for (const auto& [id, v] : doc.items()) put(id, v);
    } else if (doc.is_array()) {
      for (const auto& e : doc) put(e.at("test_id").get<std::string>(), e.at("verdict"));
    } else {
      throw UsageError(fmt::format("{}: expected an object or array of verdicts", path.string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

AlignmentInput pair_verdicts(const std::map<std::string, Verdict>& agent, const std::map<std::string, Verdict>& manual) {
  AlignmentInput in;
  std::vector<std::string> unpaired;
  for (const auto& [id, v] : manual) {
    auto it = agent.find(id);
    if (it == agent.end()) {
      unpaired.push_back(id + " (manual only)");
      continue;
    }
    in.pairs.push_back({id, it->second, v});
  }
  for (const auto& [id, v] : agent)
    if (!manual.count(id)) unpaired.push_back(id + " (agent only)");
  if (!unpaired.empty()) throw UsageError("unpaired test ids: " + util::join(unpaired, ", "));
  return in;
}

gateway::PromptBundle build_visual_prompt(const gateway::ImageAttachment& screenshot,
                                          const gateway::ImageAttachment& design,
                                          const util::PromptLibrary& prompts) {
  const auto parts = prompts.parts("visual_similarity");
  gateway::PromptBundle b;
  b.system = parts.system;
  b.grammar = gateway::Grammar::free_text;
  b.add_text(parts.user);
  b.add_image(screenshot);
  b.add_image(design);
  b.validate();
  return b;
}

std::vector<std::string> rubric_aspects(const std::string& rubric) {
  static const std::regex line(R"(^\s*\d+\.\s*([^:]+):)");
  std::vector<std::string> out;
  for (const auto& l : util::split_lines(rubric)) {
    std::smatch m;
    if (std::regex_search(l, m, line)) out.push_back(util::trim(m[1].str()));
  }
  return out;
}

ScoreParse parse_score(const std::string& reply) {
  const auto lines = util::split_lines(reply);
  std::string last;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it)
    if (!util::trim(*it).empty()) {
      last = *it;
      break;
    }
  static const std::regex number(R"([-+]?\d+(?:\.\d+)?)");
  std::smatch m;
  if (!std::regex_search(last, m, number))
    throw ScoreMissing(fmt::format("no score on the final line: '{}'", util::truncate(util::trim(last), 120)));
  ScoreParse out;
  const double raw = std::stod(m[0].str());
  out.score = std::clamp(raw, 1.0, 5.0);
  if (out.score != raw) out.warning = fmt::format("score {} clamped to {}", m[0].str(), out.score);
  return out;
}

ScoreParse score_visual_similarity(gateway::Gateway& gateway, const gateway::ProviderConfig& config,
                                   const gateway::ImageAttachment& screenshot,
                                   const gateway::ImageAttachment& design, const util::PromptLibrary& prompts) {
  const auto doc = gateway.complete_structured(build_visual_prompt(screenshot, design, prompts), config,
                                               [](const gateway::ParsedDocument& d) -> std::optional<std::string> {
                                                 try {
                                                   parse_score(d.text);
                                                   return std::nullopt;
                                                 } catch (const ScoreMissing& e) {
                                                   return std::string(e.what());
                                                 }
                                               });
  return parse_score(doc.text);
}

}  // namespace appforge::eval

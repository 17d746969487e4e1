#include "appforge/eval/report.hpp"

#include "appforge/util/fs.hpp"

#include <fmt/format.h>

namespace appforge::eval {

namespace {

double pct(std::int64_t part, std::int64_t whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole) * 100.0;
}

nlohmann::json counts_json(const EvalVerdictCounts& c) {
  return {{"yes", c.yes},
          {"partial", c.partial},
          {"no", c.no},
          {"total", c.total()},
          {"fail_to_start", c.fail_to_start},
          {"yes_rate", pct(c.yes, c.total())},
          {"partial_rate", pct(c.partial, c.total())},
          {"no_rate", pct(c.no, c.total())}};
}

nlohmann::json table_json(const std::map<std::string, CategoryResult>& table) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, r] : table) {
    auto j = counts_json(r.counts);
    j["apps"] = r.apps;
    j["started_apps"] = r.started_apps;
    j["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json("N.A.");
    out[name] = std::move(j);
  }
  return out;
}

std::optional<double> mean_of(const std::vector<EvalRecord>& records, std::optional<double> EvalRecord::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records)
    if (r.*field) {
      sum += *(r.*field);
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.1f}", *v) : std::string("N.A."); }

void render_table(std::string& out, const std::string& heading, const std::map<std::string, CategoryResult>& table) {
  std::size_t width = heading.size();
  for (const auto& [name, r] : table) width = std::max(width, name.size());
  out += fmt::format("{:<{}}  {:>6}  {:>6}  {:>8}  {:>6}  {:>8}\n", heading, width, "Tests", "YES", "PARTIAL", "NO", "Acc.");
  for (const auto& [name, r] : table) {
    const auto& c = r.counts;
    out += fmt::format("{:<{}}  {:>6}  {:>6.1f}  {:>8.1f}  {:>6.1f}  {:>8}\n", name, width, c.total(),
                       pct(c.yes, c.total()), pct(c.partial, c.total()), pct(c.no, c.total()), cell(r.accuracy));
  }
}

}  // namespace

EvalReport emit_report(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw UsageError("cannot build a report from zero records");
  for (const auto& r : records) r.validate();
  const auto counts = overall_counts(records);
  const auto breakdown = category_accuracy(records);
  int failed_apps = 0;
  for (const auto& r : records)
    if (!r.started) ++failed_apps;
  const double fail_rate = pct(failed_apps, static_cast<std::int64_t>(records.size()));
  const auto appearance = mean_of(records, &EvalRecord::appearance);
  const auto similarity = mean_of(records, &EvalRecord::similarity);
  const std::optional<double> acc = counts.total() > 0 ? std::optional<double>(accuracy(counts)) : std::nullopt;

  EvalReport rep;
  auto& s = rep.summary;
  s["schema"] = kReportSchema;
  s["apps"] = records.size();
  s["fail_to_start"] = {{"apps", failed_apps}, {"rate", fail_rate}};
  s["counts"] = counts_json(counts);
  s["accuracy"] = acc ? nlohmann::json(*acc) : nlohmann::json();
  s["mean_appearance"] = appearance ? nlohmann::json(*appearance) : nlohmann::json();
  s["mean_similarity"] = similarity ? nlohmann::json(*similarity) : nlohmann::json();
  s["by_instruction_category"] = table_json(breakdown.by_instruction);
  s["by_test_category"] = table_json(breakdown.by_test_category);

  auto& t = rep.text;
  t += fmt::format("Apps: {}  Tests: {}  Fail-to-start: {} ({:.1f}%)\n", records.size(), counts.total(), failed_apps,
                   fail_rate);
  t += fmt::format("YES {:.1f}  PARTIAL {:.1f}  NO {:.1f}  Accuracy {}\n", pct(counts.yes, counts.total()),
                   pct(counts.partial, counts.total()), pct(counts.no, counts.total()), cell(acc));
  t += fmt::format("Appearance {}  Vis. similarity {}\n\n", cell(appearance), cell(similarity));
  render_table(t, "Instruction category", breakdown.by_instruction);
  t += "\n";
  render_table(t, "Test-case category", breakdown.by_test_category);
  return rep;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  util::write_json(dir / "report.json", report.summary);
  util::write_file(dir / "report.txt", report.text);
}

std::string render_alignment(const AlignmentResult& r) {
  std::string out = fmt::format("Alignment: {}/{} = {:.2f}%\n", r.matched, r.total, r.rate);
  if (r.restricted_rate)
    out += fmt::format("YES/NO only: {}/{} = {:.2f}%\n", r.restricted_matched, r.restricted_total, *r.restricted_rate);
  for (const auto& n : r.notes) out += "note: " + n + "\n";
  return out;
}

}  // namespace appforge::eval

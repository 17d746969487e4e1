#include "appforge/testrunner/feedback.hpp"

#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include <fmt/format.h>

namespace appforge::testrunner {

PassCounts tally(const std::vector<TestReport>& reports) {
  PassCounts c;
  for (const auto& r : reports) {
    switch (r.verdict) {
      case Verdict::yes: ++c.yes; break;
      case Verdict::partial: ++c.partial; break;
      case Verdict::no: ++c.no; break;
    }
  }
  return c;
}

FeedbackBundle build_feedback(std::vector<TestReport> reports, DeploymentVerdict deployment, int round) {
  FeedbackBundle b;
  b.round = round;
  b.deployment = std::move(deployment);
  b.reports = std::move(reports);
  b.counts = tally(b.reports);
  b.digest = render_digest(b);
  return b;
}

namespace {

std::string one_line(const std::string& s, std::size_t budget = 600) {
  return util::truncate(util::collapse_whitespace(s), budget);
}

}  // namespace

std::string render_digest(const FeedbackBundle& b) {
  std::string out = fmt::format("Testing feedback (round {}).\n", b.round);
  const auto& d = b.deployment;
  if (!d.ok) {
    std::vector<std::string> signals;
    for (auto s : d.signals) signals.push_back(std::string(to_string(s)));
    out += fmt::format("Deployment verification FAILED ({}). No test cases were executed.\n",
                       signals.empty() ? "unknown" : util::join(signals, ", "));
    out += "Fix the startup problem first: the application must start with the template's launch command and "
           "serve its home page.\n";
    if (!d.diagnostics.empty()) out += "Diagnostics and logs:\n" + util::truncate(d.diagnostics, 6000) + "\n";
    if (d.discrepancy_notes && !d.discrepancy_notes->empty())
      out += "Visual discrepancies against the design:\n" + *d.discrepancy_notes + "\n";
    return out;
  }
  out += "Deployment verification passed.\n";
  if (d.discrepancy_notes && !d.discrepancy_notes->empty())
    out += "Visual discrepancies against the design:\n" + *d.discrepancy_notes + "\n";
  const auto& c = b.counts;
  out += fmt::format("Results: {} passed, {} partially passed, {} failed, out of {} test cases.\n", c.yes, c.partial,
                     c.no, c.total());
  if (c.total() > 0 && c.yes == c.total()) {
    out += "All test cases passed.\n";
    return out;
  }
  out += "Failures:\n";
  for (const auto& r : b.reports) {
    if (r.verdict == Verdict::yes) continue;
    std::string entry = fmt::format("- {} ({})", r.test_id, to_string(r.verdict));
    if (r.failed_step) {
      std::string action;
      for (const auto& t : r.traces)
        if (t.index == *r.failed_step && !t.actions.empty()) action = util::join(t.actions, "; ");
      entry += fmt::format(": failed at step {}", *r.failed_step);
      if (!action.empty()) entry += fmt::format(" after [{}]", one_line(action, 300));
    }
    entry += ".";
    if (!r.expected.empty()) entry += fmt::format(" Expected: {}.", one_line(r.expected));
    if (!r.actual.empty()) entry += fmt::format(" Actual: {}.", one_line(r.actual));
    if (r.category) entry += fmt::format(" Category: {}.", to_string(*r.category));
    if (!r.technical_info.empty()) entry += fmt::format(" Details: {}.", one_line(r.technical_info, 300));
    if (!r.recommendations.empty()) entry += fmt::format(" Recommendation: {}", one_line(util::join(r.recommendations, " ")));
    out += entry + "\n";
  }
  return out;
}

void save_feedback(const std::filesystem::path& path, const FeedbackBundle& bundle) {
  util::write_json(path, to_json(bundle));
}

FeedbackBundle load_feedback(const std::filesystem::path& path) { return feedback_from_json(util::read_json(path)); }

}  // namespace appforge::testrunner

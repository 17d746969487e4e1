#pragma once

#include "appforge/eval/metrics.hpp"

#include <filesystem>
#include <string>

namespace appforge::eval {

inline constexpr const char* kReportSchema = "appforge.eval-report/1";

struct EvalReport {
  nlohmann::json summary;
  std::string text;
};

// Throws UsageError for zero records.
EvalReport emit_report(const std::vector<EvalRecord>& records);

// Writes report.json and report.txt under dir.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

std::string render_alignment(const AlignmentResult& r);

}  // namespace appforge::eval

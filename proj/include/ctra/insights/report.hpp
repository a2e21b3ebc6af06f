#pragma once

#include "ctra/data/result_set.hpp"
#include "ctra/llm/gateway.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctra::insights {

/// What the report needs to know about one question.
struct OutcomeView {
  std::string question;  // full text, chart hint included
  bool succeeded = false;
  int attempts = 0;
  std::optional<std::string> final_sql;
  std::optional<data::ResultSet> result;
  std::vector<std::string> error_trail;
  /// Path of the chart that will be written for this question, if any.
  std::optional<std::string> plot_path;
};

struct AnalysisSection {
  std::string question;
  std::string results_table;
  std::string insight;
  std::optional<std::string> plot_reference;
  std::optional<std::string> failure_note;
};

inline constexpr std::size_t kRecommendationCount = 5;

struct ReportDocument {
  std::string introduction;
  std::vector<AnalysisSection> analyses;
  std::vector<std::string> recommendations;
  std::string conclusion;
  bool fallback = false;
  std::string fallback_reason;

  /// Plain text with INTRODUCTION / ANALYSIS / RECOMMENDATIONS / CONCLUSION headings.
  std::string to_text() const;
};

struct ReportContext {
  std::string table_schema;
  std::string output_dir;
  std::string plot_extension = "svg";
};

/// `{queries_results}` block for the report prompt.
std::string format_queries_results(const std::vector<OutcomeView>& outcomes);

/// Deterministic per-question insight (top category and its share, or time range).
std::string deterministic_insight(const OutcomeView& outcome);

/// Report text split on the four section headings; nullopt when a heading is missing.
struct ParsedReport {
  std::string introduction;
  std::string analysis;
  std::string recommendations;
  std::string conclusion;
};
std::optional<ParsedReport> parse_report_sections(const std::string& text);

/// Bullet or numbered items of a recommendations section.
std::vector<std::string> parse_recommendations(const std::string& section);

/// Report from the model when its response segments cleanly; otherwise (or when
/// `gateway` is null or fails) the deterministic fallback.
ReportDocument build_report(const std::vector<OutcomeView>& outcomes, llm::Gateway* gateway,
                            const ReportContext& ctx);

ReportDocument fallback_report(const std::vector<OutcomeView>& outcomes, std::string reason);

}  // namespace ctra::insights

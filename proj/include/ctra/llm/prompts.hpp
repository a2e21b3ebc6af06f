#pragma once

#include "ctra/llm/roles.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctra::llm {

struct PromptContext {
  std::string table_schema;
  std::optional<int> num_questions;
  std::optional<std::string> question;
  std::optional<std::string> code;
  std::optional<std::string> errors;
  std::optional<std::string> queries_results;
  std::string output_dir;
  std::optional<std::string> data;
  std::optional<std::string> plot_filename;
  /// Replaces ".png" in plot references of the report template.
  std::string plot_extension = "png";
  // retry feedback block
  std::optional<int> attempt;
  std::optional<int> max_attempts;
  std::optional<std::string> reflection;
};

class MissingPlaceholder : public std::runtime_error {
 public:
  MissingPlaceholder(std::string role, std::string name);
  const std::string& role() const { return role_; }
  const std::string& name() const { return name_; }

 private:
  std::string role_;
  std::string name_;
};

/// Template texts keyed by asset name (generate_questions, generate_sql, code_check,
/// reflect, report, chart, retry_feedback, chart_spec).
class PromptLibrary {
 public:
  /// Texts compiled into the binary from assets/prompts.
  static const PromptLibrary& embedded();
  /// Reads `<dir>/<name>.txt`; names without a file keep the embedded text.
  static PromptLibrary load(const std::filesystem::path& dir);

  const std::string& text(std::string_view name) const;
  static std::string_view asset_for(Role role);

  std::string render(Role role, const PromptContext& ctx) const;
  /// Block appended to the SQL prompt on a retry.
  std::string render_retry_feedback(const PromptContext& ctx) const;
  /// CHART_PROMPT followed by the ChartSpec JSON instructions.
  std::string render_chart_spec(const PromptContext& ctx) const;

 private:
  std::map<std::string, std::string, std::less<>> texts_;
};

std::string render_prompt(Role role, const PromptContext& ctx);

/// Single pass over `{identifier}` placeholders known to PromptContext; other braces
/// are left alone. Throws MissingPlaceholder naming `role_label`.
std::string substitute(std::string_view tmpl, const PromptContext& ctx, std::string_view role_label);

}  // namespace ctra::llm

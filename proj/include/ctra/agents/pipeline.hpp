#pragma once

#include "ctra/data/datastore.hpp"
#include "ctra/insights/chart.hpp"
#include "ctra/insights/report.hpp"
#include "ctra/llm/gateway.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctra::agents {

enum class ChartHint { bar, line, none };

std::string_view chart_hint_name(ChartHint hint);
/// From a trailing "(Suitable for X chart)" clause.
ChartHint parse_chart_hint(const std::string& question);

struct Question {
  std::string text;
  ChartHint chart_hint = ChartHint::none;
  int index = 0;
};

enum class OutcomeStatus { succeeded, failed };

struct QuestionOutcome {
  Question question;
  std::optional<std::string> final_sql;
  std::optional<data::ResultSet> result;
  OutcomeStatus status = OutcomeStatus::failed;
  int attempts = 0;
  std::vector<std::string> error_trail;
  std::vector<std::string> reflection_notes;
};

struct PipelineConfig {
  int num_questions = 5;
  int max_retries = 3;
  std::filesystem::path output_dir = "out";
  std::map<llm::Role, llm::RoleModelConfig> role_configs = llm::default_role_configs();
  std::filesystem::path dataset_path;
  insights::ImageFormat chart_format = insights::ImageFormat::svg;
  /// Ask the code-check model for extra suggestions after lint passes.
  bool llm_code_check = true;
  /// Ask the chart model for a ChartSpec before falling back to the rules.
  bool llm_charts = false;
  std::chrono::milliseconds node_budget{600'000};

  /// Directory text used in prompts and plot references.
  std::string reference_dir() const;
  void validate() const;
};

/// Mutable state threaded through the graph.
struct AgentState {
  std::string schema_text;
  std::vector<Question> questions;
  std::size_t cursor = 0;
  std::optional<std::string> current_sql;
  std::vector<std::string> current_errors;
  int retry_count = 0;
  std::vector<QuestionOutcome> outcomes;
  std::optional<insights::ReportDocument> report;
  std::vector<insights::ChartSpec> charts;

  // per-question scratch, cleared by the navigator
  std::vector<std::string> current_suggestions;
  std::vector<std::string> error_trail;
  std::vector<std::string> reflection_notes;
  std::optional<data::ResultSet> pending_result;
  int attempts = 0;

  /// Node names in execution order.
  std::vector<std::string> trace;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValidationRoute { ok, error };
enum class RetryRoute { retry, give_up, proceed };
enum class NavigatorRoute { next_question, summarize };

/// Graph nodes. Each appends its name to state.trace.
void node_question_creation(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config);
/// Returns false when no SQL came back (the attempt already failed).
bool node_query_builder(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config);
std::string node_reflect(AgentState& state, llm::Gateway& gateway);
ValidationRoute node_query_validator(AgentState& state, const data::QueryBackend& datastore, llm::Gateway& gateway,
                                     const PipelineConfig& config);
/// Routers; they record outcomes but are not counted as nodes.
RetryRoute route_after_validation(AgentState& state, ValidationRoute validation, const PipelineConfig& config);
NavigatorRoute node_question_navigator(AgentState& state);
void node_summarization(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config);
void node_charting(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config);

/// Report view of the outcomes with plot paths filled in.
std::vector<insights::OutcomeView> outcome_views(const AgentState& state, const PipelineConfig& config);
/// True for questions that get a chart file.
bool wants_chart(const QuestionOutcome& outcome);
std::string plot_filename(const PipelineConfig& config, int one_based_index);

struct PipelineResult {
  insights::ReportDocument report;
  std::vector<insights::ChartSpec> charts;
  std::vector<QuestionOutcome> outcomes;
  std::vector<std::string> trace;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Runs the whole graph and writes report.txt and chart files into config.output_dir.
PipelineResult run_pipeline(const PipelineConfig& config, const data::QueryBackend& datastore, llm::Gateway& gateway);
/// Loads config.dataset_path first; a load failure is a PipelineError.
PipelineResult run_pipeline(const PipelineConfig& config, llm::Gateway& gateway);

}  // namespace ctra::agents

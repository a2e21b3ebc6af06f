#include "ctra/agents/pipeline.hpp"

#include "ctra/data/dataset.hpp"
#include "ctra/llm/extract.hpp"
#include "ctra/sql/lint.hpp"

#include <algorithm>
#include <fstream>

namespace ctra::agents {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

void require(bool cond, const char* what) {
  if (!cond) throw std::logic_error(what);
}

/// JSON list of row objects, as the chart prompt's `data` variable.
std::string rows_as_json(const data::ResultSet& rs) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : rs.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < rs.columns.size(); ++c) {
      const auto& cell = row[c];
      if (data::is_null(cell)) {
        obj[rs.columns[c].name] = nullptr;
      } else if (auto d = std::get_if<Decimal>(&cell)) {
        obj[rs.columns[c].name] = nlohmann::ordered_json::parse(d->to_string(6));
      } else {
        obj[rs.columns[c].name] = std::get<std::string>(cell);
      }
    }
    rows.push_back(std::move(obj));
  }
  return rows.dump();
}

}  // namespace

std::string_view chart_hint_name(ChartHint hint) {
  switch (hint) {
    case ChartHint::bar: return "bar";
    case ChartHint::line: return "line";
    case ChartHint::none: return "none";
  }
  return "none";
}

ChartHint parse_chart_hint(const std::string& question) {
  std::string lower = question;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto open = lower.rfind("(suitable for ");
  if (open == std::string::npos) return ChartHint::none;
  const auto close = lower.find(')', open);
  if (close == std::string::npos) return ChartHint::none;
  const std::string kind = lower.substr(open + 14, close - open - 14);
  if (kind.find("bar") != std::string::npos) return ChartHint::bar;
  if (kind.find("line") != std::string::npos) return ChartHint::line;
  return ChartHint::none;
}

std::string PipelineConfig::reference_dir() const {
  std::string d = output_dir.generic_string();
  while (d.size() > 1 && d.back() == '/') d.pop_back();
  return d.empty() ? "." : d;
}

void PipelineConfig::validate() const {
  if (num_questions < 1) throw PipelineError("num_questions must be at least 1");
  if (max_retries < 0) throw PipelineError("max_retries must be non-negative");
}

std::string plot_filename(const PipelineConfig& config, int one_based_index) {
  return config.reference_dir() + "/plot_query_" + std::to_string(one_based_index) + "." +
         std::string(insights::image_extension(config.chart_format));
}

bool wants_chart(const QuestionOutcome& o) {
  return o.status == OutcomeStatus::succeeded && o.question.chart_hint != ChartHint::none;
}

void node_question_creation(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config) {
  require(state.questions.empty(), "question creation requires an empty question list");
  state.trace.push_back("question_creation");
  llm::PromptContext ctx;
  ctx.table_schema = state.schema_text;
  ctx.num_questions = config.num_questions;
  ctx.output_dir = config.reference_dir();
  std::vector<std::string> texts;
  try {
    texts = llm::extract_json_array(gateway.render_and_complete(llm::Role::question_creation, ctx));
  } catch (const llm::LlmError& e) {
    throw PipelineError(std::string("question creation failed: ") + e.what());
  } catch (const llm::ExtractError& e) {
    throw PipelineError(std::string("question creation returned no usable question list: ") + e.what());
  }
  texts.erase(std::remove_if(texts.begin(), texts.end(), [](const std::string& t) { return trim(t).empty(); }),
              texts.end());
  if (texts.empty()) throw PipelineError("question creation returned no questions");
  if (texts.size() > static_cast<std::size_t>(config.num_questions)) texts.resize(static_cast<std::size_t>(config.num_questions));
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string t = trim(texts[i]);
    state.questions.push_back({t, parse_chart_hint(t), static_cast<int>(i)});
  }
  state.cursor = 0;
}

std::string node_reflect(AgentState& state, llm::Gateway& gateway) {
  require(!state.current_errors.empty(), "reflection requires errors");
  state.trace.push_back("reflect");
  llm::PromptContext ctx;
  ctx.table_schema = state.schema_text;
  ctx.code = state.current_sql ? *state.current_sql : std::string("(no query was produced)");
  ctx.errors = join(state.current_errors, "\n");
  std::string guidance;
  try {
    guidance = trim(llm::strip_think(gateway.render_and_complete(llm::Role::reflect, ctx)));
  } catch (const llm::LlmError&) {
    guidance.clear();
  }
  if (guidance.empty()) {
    guidance = state.current_suggestions.empty() ? "Fix: " + join(state.current_errors, "\nFix: ")
                                                 : join(state.current_suggestions, "\n");
  }
  state.reflection_notes.push_back(guidance);
  return guidance;
}

bool node_query_builder(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config) {
  require(state.cursor < state.questions.size(), "query builder called past the last question");
  std::string feedback;
  if (state.retry_count > 0) {
    llm::PromptContext fb;
    fb.attempt = state.retry_count + 1;
    fb.max_attempts = config.max_retries + 1;
    fb.code = state.current_sql ? *state.current_sql : std::string("(no query was produced)");
    fb.errors = join(state.current_errors, "\n");
    fb.reflection = node_reflect(state, gateway);
    feedback = gateway.prompts().render_retry_feedback(fb);
  }
  state.trace.push_back("query_builder");
  state.attempts += 1;
  state.pending_result.reset();
  state.current_suggestions.clear();

  llm::PromptContext ctx;
  ctx.table_schema = state.schema_text;
  ctx.question = state.questions[state.cursor].text;
  const std::string prompt = gateway.prompts().render(llm::Role::query_builder, ctx) + feedback;
  try {
    state.current_sql = llm::extract_sql(gateway.complete(llm::Role::query_builder, prompt));
    state.current_errors.clear();
    return true;
  } catch (const llm::LlmError& e) {
    state.current_errors = {std::string("query builder call failed: ") + e.what()};
  } catch (const llm::ExtractError& e) {
    state.current_errors = {std::string("model response contained no SELECT statement: ") + e.what()};
  }
  state.current_sql.reset();
  state.error_trail.push_back(join(state.current_errors, "; "));
  return false;
}

ValidationRoute node_query_validator(AgentState& state, const data::QueryBackend& datastore, llm::Gateway& gateway,
                                     const PipelineConfig& config) {
  require(state.current_sql.has_value(), "validator requires a current query");
  state.trace.push_back("query_validator");
  const std::string& sql_text = *state.current_sql;
  auto fail = [&](std::vector<std::string> errors) {
    state.current_errors = std::move(errors);
    state.error_trail.push_back(join(state.current_errors, "; "));
    return ValidationRoute::error;
  };

  sql::SqlCheck check = sql::check_sql(sql_text, datastore.schema());
  state.current_suggestions = check.report.suggestions;
  if (!check.report.is_valid) return fail(check.report.errors);

  if (config.llm_code_check) {
    llm::PromptContext ctx;
    ctx.table_schema = state.schema_text;
    ctx.code = sql_text;
    ctx.question = state.questions[state.cursor].text;
    try {
      const auto verdict = llm::extract_json_object(gateway.render_and_complete(llm::Role::code_check, ctx));
      for (const auto& s : verdict.suggestions) {
        if (std::find(state.current_suggestions.begin(), state.current_suggestions.end(), s) ==
            state.current_suggestions.end()) {
          state.current_suggestions.push_back(s);
        }
      }
    } catch (const llm::LlmError&) {
    } catch (const llm::ExtractError&) {
    }
  }

  try {
    state.pending_result = datastore.execute(*check.ast);
  } catch (const engine::ExecutionError& e) {
    return fail({e.message()});
  }
  state.current_errors.clear();
  return ValidationRoute::ok;
}

RetryRoute route_after_validation(AgentState& state, ValidationRoute validation, const PipelineConfig& config) {
  QuestionOutcome o;
  if (validation == ValidationRoute::ok) {
    o.status = OutcomeStatus::succeeded;
    o.final_sql = state.current_sql;
    o.result = std::move(state.pending_result);
  } else if (state.retry_count < config.max_retries) {
    state.retry_count += 1;
    return RetryRoute::retry;
  } else {
    o.status = OutcomeStatus::failed;
  }
  o.question = state.questions[state.cursor];
  o.attempts = state.attempts;
  o.error_trail = state.error_trail;
  o.reflection_notes = state.reflection_notes;
  state.outcomes.push_back(std::move(o));
  return validation == ValidationRoute::ok ? RetryRoute::proceed : RetryRoute::give_up;
}

NavigatorRoute node_question_navigator(AgentState& state) {
  require(state.outcomes.size() == state.cursor + 1, "navigator requires an outcome for the current question");
  state.current_sql.reset();
  state.current_errors.clear();
  state.current_suggestions.clear();
  state.error_trail.clear();
  state.reflection_notes.clear();
  state.pending_result.reset();
  state.retry_count = 0;
  state.attempts = 0;
  state.cursor += 1;
  return state.cursor < state.questions.size() ? NavigatorRoute::next_question : NavigatorRoute::summarize;
}

std::vector<insights::OutcomeView> outcome_views(const AgentState& state, const PipelineConfig& config) {
  std::vector<insights::OutcomeView> views;
  for (std::size_t i = 0; i < state.outcomes.size(); ++i) {
    const auto& o = state.outcomes[i];
    insights::OutcomeView v;
    v.question = o.question.text;
    v.succeeded = o.status == OutcomeStatus::succeeded;
    v.attempts = o.attempts;
    v.final_sql = o.final_sql;
    v.result = o.result;
    v.error_trail = o.error_trail;
    if (wants_chart(o)) v.plot_path = plot_filename(config, static_cast<int>(i) + 1);
    views.push_back(std::move(v));
  }
  return views;
}

void node_summarization(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config) {
  state.trace.push_back("summarization");
  insights::ReportContext ctx;
  ctx.table_schema = state.schema_text;
  ctx.output_dir = config.reference_dir();
  ctx.plot_extension = std::string(insights::image_extension(config.chart_format));
  state.report = insights::build_report(outcome_views(state, config), &gateway, ctx);
}

void node_charting(AgentState& state, llm::Gateway& gateway, const PipelineConfig& config) {
  state.trace.push_back("charting");
  state.charts.clear();
  for (std::size_t i = 0; i < state.outcomes.size(); ++i) {
    const auto& o = state.outcomes[i];
    if (!wants_chart(o)) continue;
    const std::string filename = plot_filename(config, static_cast<int>(i) + 1);
    std::optional<insights::ChartSpec> spec;
    if (config.llm_charts && o.result && !o.result->rows.empty()) {
      llm::PromptContext ctx;
      ctx.data = rows_as_json(*o.result);
      ctx.plot_filename = filename;
      ctx.output_dir = config.reference_dir();
      try {
        const std::string prompt = gateway.prompts().render_chart_spec(ctx);
        spec = insights::spec_from_json(llm::extract_any_json_object(gateway.complete(llm::Role::chart, prompt)),
                                        filename);
      } catch (const llm::LlmError&) {
      } catch (const llm::ExtractError&) {
      }
    }
    if (!spec) spec = insights::spec_from_result(o.question.text, *o.result, filename);
    state.charts.push_back(std::move(*spec));
  }
}

PipelineResult run_pipeline(const PipelineConfig& config, const data::QueryBackend& datastore, llm::Gateway& gateway) {
  config.validate();
  AgentState state;
  state.schema_text = datastore.schema().to_prompt_text();

  auto timed = [&](const char* name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = fn();
    if (std::chrono::steady_clock::now() - t0 > config.node_budget) {
      throw PipelineError(std::string("node ") + name + " exceeded its time budget");
    }
    return r;
  };

  timed("question_creation", [&] {
    node_question_creation(state, gateway, config);
    return 0;
  });
  while (true) {
    RetryRoute route = RetryRoute::retry;
    while (route == RetryRoute::retry) {
      const bool built = timed("query_builder", [&] { return node_query_builder(state, gateway, config); });
      const ValidationRoute v =
          built ? timed("query_validator", [&] { return node_query_validator(state, datastore, gateway, config); })
                : ValidationRoute::error;
      route = route_after_validation(state, v, config);
    }
    if (node_question_navigator(state) == NavigatorRoute::summarize) break;
  }
  timed("summarization", [&] {
    node_summarization(state, gateway, config);
    return 0;
  });
  timed("charting", [&] {
    node_charting(state, gateway, config);
    return 0;
  });

  PipelineResult result;
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw PipelineError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  const auto report_path = config.output_dir / "report.txt";
  {
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw PipelineError("cannot write " + report_path.string());
    out << state.report->to_text();
  }
  result.files.push_back(report_path);
  for (const auto& spec : state.charts) {
    const auto name = std::filesystem::path(spec.filename).filename();
    try {
      insights::render_chart(spec, config.output_dir / name, config.chart_format);
      result.files.push_back(config.output_dir / name);
    } catch (const insights::ChartIoError& e) {
      result.warnings.push_back(e.what());
    }
  }
  result.report = std::move(*state.report);
  result.charts = std::move(state.charts);
  result.outcomes = std::move(state.outcomes);
  result.trace = std::move(state.trace);
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config, llm::Gateway& gateway) {
  std::vector<data::JobRecord> rows;
  try {
    rows = data::load_dataset(config.dataset_path, data::format_from_path(config.dataset_path));
  } catch (const data::DatasetIoError& e) {
    throw PipelineError(std::string("dataset load failed: ") + e.what());
  } catch (const data::SchemaViolation& e) {
    throw PipelineError(std::string("dataset load failed: ") + e.what());
  }
  data::InMemoryBackend backend(std::move(rows));
  return run_pipeline(config, backend, gateway);
}

}  // namespace ctra::agents

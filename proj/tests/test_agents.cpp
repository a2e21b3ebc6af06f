#include "ctra/agents/pipeline.hpp"
#include "ctra/data/dataset.hpp"
#include "test_paths.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace ctra;
using namespace ctra::agents;
using llm::Role;
using llm::ScriptStep;

namespace {

const char* kGood = "```sql\nSELECT state, COUNT(*) AS job_count FROM jobs GROUP BY state ORDER BY job_count DESC\n```";
const char* kBadColumn = "```sql\nSELECT status, COUNT(*) AS job_count FROM jobs GROUP BY status\n```";
const char* kProse = "The table cannot answer that.";
const char* kVerdict = R"({"is_valid": true, "errors": [], "suggestions": []})";

data::InMemoryBackend five_rows() {
  return data::InMemoryBackend(
      data::load_dataset(testing_paths::fixture("data/five_rows.jsonl"), data::DatasetFormat::jsonl));
}

std::string questions_json(int n) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    arr.push_back("How do job counts compare across state values, case " + std::to_string(i) +
                  "? (Suitable for bar chart)");
  }
  return arr.dump();
}

PipelineConfig config_in(const std::filesystem::path& dir, int questions = 1, int retries = 3) {
  PipelineConfig c;
  c.num_questions = questions;
  c.max_retries = retries;
  c.output_dir = dir;
  return c;
}

std::size_t count(const std::vector<std::string>& trace, const std::string& name) {
  return static_cast<std::size_t>(std::count(trace.begin(), trace.end(), name));
}

}  // namespace

TEST(ChartHint, ParsesTrailingClause) {
  EXPECT_EQ(parse_chart_hint("Which labs are busiest? (Suitable for bar chart)"), ChartHint::bar);
  EXPECT_EQ(parse_chart_hint("Daily counts? (suitable for line chart)  "), ChartHint::line);
  EXPECT_EQ(parse_chart_hint("How many jobs are there?"), ChartHint::none);
  EXPECT_EQ(parse_chart_hint("A (Suitable for pie chart)"), ChartHint::none);
  EXPECT_EQ(chart_hint_name(ChartHint::bar), "bar");
}

TEST(Config, Validation) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.num_questions = 0;
  EXPECT_THROW(c.validate(), PipelineError);
  c.num_questions = 1;
  c.max_retries = -1;
  EXPECT_THROW(c.validate(), PipelineError);
}

TEST(Config, PlotFilename) {
  PipelineConfig c;
  c.output_dir = "out";
  EXPECT_EQ(plot_filename(c, 2), "out/plot_query_2.svg");
}

TEST(Routing, RetryUntilBudgetThenGiveUp) {
  AgentState s;
  s.questions = {{"q", ChartHint::none, 0}};
  PipelineConfig c;
  c.max_retries = 2;
  s.attempts = 1;
  EXPECT_EQ(route_after_validation(s, ValidationRoute::error, c), RetryRoute::retry);
  EXPECT_EQ(route_after_validation(s, ValidationRoute::error, c), RetryRoute::retry);
  EXPECT_TRUE(s.outcomes.empty());
  EXPECT_EQ(route_after_validation(s, ValidationRoute::error, c), RetryRoute::give_up);
  ASSERT_EQ(s.outcomes.size(), 1u);
  EXPECT_EQ(s.outcomes[0].status, OutcomeStatus::failed);
  EXPECT_EQ(node_question_navigator(s), NavigatorRoute::summarize);
  EXPECT_EQ(s.retry_count, 0);
}

TEST(Routing, NavigatorAdvancesAndClearsScratch) {
  AgentState s;
  s.questions = {{"a", ChartHint::none, 0}, {"b", ChartHint::none, 1}};
  s.current_sql = "SELECT 1";
  s.error_trail = {"x"};
  s.attempts = 2;
  PipelineConfig c;
  EXPECT_EQ(route_after_validation(s, ValidationRoute::ok, c), RetryRoute::proceed);
  EXPECT_EQ(node_question_navigator(s), NavigatorRoute::next_question);
  EXPECT_EQ(s.cursor, 1u);
  EXPECT_FALSE(s.current_sql);
  EXPECT_TRUE(s.error_trail.empty());
  EXPECT_EQ(s.attempts, 0);
}

TEST(Pipeline, TwoBrokenThenGood) {
  const auto dir = testing_paths::scratch_dir("agents-two-broken");
  llm::ScriptedBackend b({{Role::question_creation, {ScriptStep::reply(questions_json(1))}},
                          {Role::query_builder,
                           {ScriptStep::reply(kBadColumn), ScriptStep::reply(kProse), ScriptStep::reply(kGood)}},
                          {Role::code_check, {ScriptStep::reply(kVerdict)}},
                          {Role::reflect, {ScriptStep::reply("Use state.")}},
                          {Role::report, {ScriptStep::fail(llm::LlmError::Kind::timeout)}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto ds = five_rows();
  const auto r = run_pipeline(config_in(dir / "out"), ds, g);
  ASSERT_EQ(r.outcomes.size(), 1u);
  const auto& o = r.outcomes[0];
  EXPECT_EQ(o.status, OutcomeStatus::succeeded);
  EXPECT_EQ(o.attempts, 3);
  EXPECT_EQ(o.error_trail.size(), 2u);
  EXPECT_EQ(o.reflection_notes.size(), 2u);
  ASSERT_TRUE(o.result);
  EXPECT_EQ(o.result->rows.size(), 2u);
  EXPECT_TRUE(r.report.fallback);
  EXPECT_EQ(r.charts.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "plot_query_1.svg"));
}

TEST(Pipeline, AlwaysBrokenFailsAfterFourAttempts) {
  const auto dir = testing_paths::scratch_dir("agents-broken");
  llm::ScriptedBackend b({{Role::question_creation, {ScriptStep::reply(questions_json(1))}},
                          {Role::query_builder, {ScriptStep::reply(kBadColumn)}},
                          {Role::reflect, {ScriptStep::reply("Use state.")}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto ds = five_rows();
  const auto r = run_pipeline(config_in(dir / "out"), ds, g);
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(r.outcomes[0].status, OutcomeStatus::failed);
  EXPECT_EQ(r.outcomes[0].attempts, 4);
  EXPECT_EQ(b.calls(Role::query_builder), 4u);
  EXPECT_EQ(b.calls(Role::reflect), 3u);
  EXPECT_TRUE(r.charts.empty());
  const std::string text = r.report.to_text();
  EXPECT_NE(text.find("4 attempts"), std::string::npos) << text;
}

TEST(Pipeline, BuilderFailureSkipsValidator) {
  const auto dir = testing_paths::scratch_dir("agents-skip");
  llm::ScriptedBackend b({{Role::question_creation, {ScriptStep::reply(questions_json(1))}},
                          {Role::query_builder, {ScriptStep::reply(kProse), ScriptStep::reply(kGood)}},
                          {Role::code_check, {ScriptStep::reply(kVerdict)}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto ds = five_rows();
  const auto r = run_pipeline(config_in(dir / "out"), ds, g);
  const std::vector<std::string> expected = {"question_creation", "query_builder", "reflect",     "query_builder",
                                             "query_validator",   "summarization", "charting"};
  EXPECT_EQ(r.trace, expected);
  EXPECT_EQ(r.outcomes[0].attempts, 2);
  EXPECT_EQ(b.calls(Role::code_check), 1u);
}

TEST(Pipeline, QuestionCreationFailureIsFatal) {
  const auto dir = testing_paths::scratch_dir("agents-fatal");
  llm::ScriptedBackend b({{Role::question_creation, {ScriptStep::reply("no list here")}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto ds = five_rows();
  EXPECT_THROW(run_pipeline(config_in(dir / "out"), ds, g), PipelineError);
}

TEST(Pipeline, ExtraQuestionsAreTruncated) {
  const auto dir = testing_paths::scratch_dir("agents-extra");
  llm::ScriptedBackend b({{Role::question_creation, {ScriptStep::reply(questions_json(7))}},
                          {Role::query_builder, {ScriptStep::reply(kGood)}},
                          {Role::code_check, {ScriptStep::reply(kVerdict)}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto ds = five_rows();
  const auto r = run_pipeline(config_in(dir / "out", 3), ds, g);
  EXPECT_EQ(r.outcomes.size(), 3u);
}

TEST(Pipeline, MissingDatasetIsPipelineError) {
  llm::ScriptedBackend b;
  llm::Gateway g(b, llm::default_role_configs());
  PipelineConfig c;
  c.dataset_path = "/nonexistent/jobs.jsonl";
  EXPECT_THROW(run_pipeline(c, g), PipelineError);
}

TEST(Pipeline, TraceBoundedAndDeterministic) {
  std::mt19937 rng(17);
  const auto ds = five_rows();
  for (int trial = 0; trial < 40; ++trial) {
    const int q = 1 + static_cast<int>(rng() % 4);
    const int retries = static_cast<int>(rng() % 4);
    std::vector<ScriptStep> builder;
    for (int i = 0; i < q * (retries + 1); ++i) {
      const auto pick = rng() % 3;
      builder.push_back(ScriptStep::reply(pick == 0 ? kGood : pick == 1 ? kBadColumn : kProse));
    }
    const std::map<Role, std::vector<ScriptStep>> script = {
        {Role::question_creation, {ScriptStep::reply(questions_json(q))}},
        {Role::query_builder, builder},
        {Role::code_check, {ScriptStep::reply(kVerdict)}},
        {Role::reflect, {ScriptStep::reply("Use state.")}}};
    std::vector<std::string> traces[2];
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      testing_paths::ScopedCwd cwd(testing_paths::scratch_dir("agents-bound-" + std::to_string(run)));
      llm::ScriptedBackend b(script);
      llm::Gateway g(b, llm::default_role_configs());
      const auto r = run_pipeline(config_in("out", q, retries), ds, g);
      ASSERT_EQ(r.outcomes.size(), static_cast<std::size_t>(q));
      for (const auto& o : r.outcomes) {
        EXPECT_GE(o.attempts, 1);
        EXPECT_LE(o.attempts, retries + 1);
        EXPECT_EQ(o.status == OutcomeStatus::failed, o.attempts == retries + 1 && !o.final_sql);
      }
      EXPECT_LE(r.trace.size(), static_cast<std::size_t>(q * (2 + 3 * retries) + 3));
      EXPECT_EQ(count(r.trace, "question_creation"), 1u);
      EXPECT_EQ(r.trace.back(), "charting");
      traces[run] = r.trace;
      reports[run] = r.report.to_text();
    }
    EXPECT_EQ(traces[0], traces[1]);
    EXPECT_EQ(reports[0], reports[1]);
  }
}

TEST(Pipeline, OutcomeViewsCarryPlotPaths) {
  AgentState s;
  QuestionOutcome ok;
  ok.question = {"a (Suitable for bar chart)", ChartHint::bar, 0};
  ok.status = OutcomeStatus::succeeded;
  ok.result = data::ResultSet{};
  QuestionOutcome bad;
  bad.question = {"b (Suitable for line chart)", ChartHint::line, 1};
  s.outcomes = {ok, bad};
  PipelineConfig c;
  c.output_dir = "out";
  const auto v = outcome_views(s, c);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].plot_path, "out/plot_query_1.svg");
  EXPECT_FALSE(v[1].plot_path);
  EXPECT_TRUE(wants_chart(ok));
  EXPECT_FALSE(wants_chart(bad));
}

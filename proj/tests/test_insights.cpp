#include "ctra/insights/chart.hpp"
#include "ctra/insights/report.hpp"
#include "ctra/llm/backend.hpp"
#include "test_paths.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace ctra;
using namespace ctra::insights;

namespace {

data::ResultSet table(std::vector<std::pair<std::string, long>> rows, const std::string& key = "workflow_id",
                      const std::string& value = "error_count") {
  data::ResultSet rs;
  rs.columns = {{key, data::ColumnKind::text, true}, {value, data::ColumnKind::number, true}};
  for (auto& [k, v] : rows) rs.rows.push_back({k, Decimal(v)});
  return rs;
}

OutcomeView succeeded(std::string question, data::ResultSet rs, std::optional<std::string> plot = std::nullopt) {
  OutcomeView v;
  v.question = std::move(question);
  v.succeeded = true;
  v.attempts = 1;
  v.final_sql = "SELECT workflow_id, COUNT(*) AS error_count FROM jobs GROUP BY workflow_id";
  v.result = std::move(rs);
  v.plot_path = std::move(plot);
  return v;
}

OutcomeView failed(std::string question) {
  OutcomeView v;
  v.question = std::move(question);
  v.attempts = 4;
  v.error_trail = {"column 'status' does not exist"};
  return v;
}

const char* kReport =
    "<think>draft</think>\n"
    "INTRODUCTION\nThe jobs table was analyzed.\n\n"
    "ANALYSIS\nQuery 1: wf-a dominates errors.\nQuery 2: nothing.\n\n"
    "RECOMMENDATIONS\n1. Audit wf-a.\n2. Add\n   monitoring.\n- Third item\n\n"
    "CONCLUSION\nFocus on wf-a.\n";

}  // namespace

TEST(Chart, BarKeepsTopTenDescending) {
  std::vector<std::pair<std::string, long>> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({"wf-" + std::to_string(i), (i * 7) % 12 + 1});
  const auto spec = spec_from_result("Which workflows fail most? (Suitable for bar chart)", table(rows), "out/p.svg");
  EXPECT_EQ(spec.kind, ChartKind::bar);
  ASSERT_EQ(spec.categories_or_dates.size(), kMaxBars);
  ASSERT_EQ(spec.series.size(), 1u);
  const auto& v = spec.series[0].values;
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1]);
  EXPECT_EQ(v.front(), Decimal(12));
  EXPECT_EQ(spec.title, "Which workflows fail most");
}

TEST(Chart, BarRuleProperty) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 25);
    std::vector<std::pair<std::string, long>> rows;
    std::multiset<long> all;
    for (int i = 0; i < n; ++i) {
      const long x = static_cast<long>(rng() % 50);
      rows.push_back({"c" + std::to_string(i), x});
      all.insert(x);
    }
    const auto spec = spec_from_result("q", table(rows), "f.svg");
    ASSERT_EQ(spec.kind, ChartKind::bar);
    ASSERT_EQ(spec.categories_or_dates.size(), std::min<std::size_t>(n, kMaxBars));
    auto it = all.rbegin();
    for (const auto& d : spec.series[0].values) EXPECT_EQ(d, Decimal(*it++));
  }
}

TEST(Chart, EmptyResultIsPlaceholder) {
  const auto spec = spec_from_result("q (Suitable for bar chart)", table({}), "out/p.svg");
  EXPECT_EQ(spec.kind, ChartKind::placeholder);
  EXPECT_EQ(spec.message, kDataUnavailable);
  EXPECT_NE(render_svg(spec).find("Data Unavailable"), std::string::npos);
}

TEST(Chart, DatesBecomeSortedLine) {
  const auto spec =
      spec_from_result("Daily jobs", table({{"2024-03-03", 4}, {"2024-03-01", 9}, {"2024-03-02", 1}}, "day", "n"),
                       "f.svg");
  EXPECT_EQ(spec.kind, ChartKind::line);
  EXPECT_EQ(spec.categories_or_dates, (std::vector<std::string>{"2024-03-01", "2024-03-02", "2024-03-03"}));
  EXPECT_EQ(spec.series[0].values[0], Decimal(9));
}

TEST(Chart, TwoMeasuresOverTimeIsDualAxis) {
  data::ResultSet rs;
  rs.columns = {{"week", data::ColumnKind::text, true},
                {"jobs", data::ColumnKind::number, true},
                {"avg_wait", data::ColumnKind::number, true}};
  rs.rows = {{std::string("2024-W10"), Decimal(5), Decimal(30)}, {std::string("2024-W09"), Decimal(2), std::monostate{}}};
  const auto spec = spec_from_result("q", rs, "f.svg");
  EXPECT_EQ(spec.kind, ChartKind::dual_axis);
  ASSERT_EQ(spec.series.size(), 2u);
  EXPECT_EQ(spec.categories_or_dates.front(), "2024-W09");
  EXPECT_EQ(spec.series[1].values.front(), Decimal(0));
}

TEST(Chart, SvgIsDeterministicAndEscaped) {
  const auto spec = spec_from_result("Errors for <lab> & co", table({{"a<b", 3}, {"c", 1}}), "f.svg");
  const auto svg = render_svg(spec);
  EXPECT_EQ(svg, render_svg(spec));
  EXPECT_NE(svg.find("<svg xmlns"), std::string::npos);
  EXPECT_NE(svg.find("&lt;lab&gt; &amp; co"), std::string::npos);
  EXPECT_EQ(svg.find("a<b"), std::string::npos);
}

TEST(Chart, WritesSvgFile) {
  const auto dir = testing_paths::scratch_dir("chart-write");
  const auto spec = spec_from_result("q", table({{"a", 3}}), "plot_query_1.svg");
  render_chart(spec, dir / "nested" / "plot_query_1.svg");
  std::ifstream in(dir / "nested" / "plot_query_1.svg");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), render_svg(spec));
}

TEST(Chart, TitleFromQuestion) {
  EXPECT_EQ(title_from_question("How do labs compare? (Suitable for bar chart)"), "How do labs compare");
  EXPECT_EQ(title_from_question(""), "Query Results");
  EXPECT_LE(title_from_question(std::string(200, 'x')).size(), 90u);
}

TEST(Chart, SpecFromJson) {
  const auto good = spec_from_json(nlohmann::json::parse(R"({"kind":"bar","title":"t","categories_or_dates":["a","b"],
      "series":[{"name":"n","values":[1,null]}]})"),
                                   "f.svg");
  ASSERT_TRUE(good);
  EXPECT_EQ(good->series[0].values[1], Decimal(0));
  EXPECT_EQ(good->filename, "f.svg");
  EXPECT_FALSE(spec_from_json(nlohmann::json::parse(R"({"kind":"pie"})"), "f"));
  EXPECT_FALSE(spec_from_json(nlohmann::json::parse(
                                  R"({"kind":"line","categories_or_dates":["a"],"series":[{"values":[1,2]}]})"),
                              "f"));
  EXPECT_FALSE(spec_from_json(nlohmann::json::parse(
                                  R"({"kind":"dual_axis","categories_or_dates":["a"],"series":[{"values":[1]}]})"),
                              "f"));
  EXPECT_FALSE(spec_from_json(nlohmann::json::parse(
                                  R"({"kind":"bar","categories_or_dates":["a"],"series":[{"values":["x"]}]})"),
                              "f"));
}

TEST(Report, ParsesSections) {
  const auto p = parse_report_sections(std::string(kReport).substr(std::string(kReport).find("INTRO")));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->introduction, "The jobs table was analyzed.");
  EXPECT_NE(p->analysis.find("Query 2"), std::string::npos);
  EXPECT_EQ(p->conclusion, "Focus on wf-a.");
  EXPECT_FALSE(parse_report_sections("INTRODUCTION\nx\nANALYSIS\ny\n"));
}

TEST(Report, RecommendationItems) {
  const auto items = parse_recommendations("1. Audit wf-a.\n2. Add\n   monitoring.\n- Third item\n");
  EXPECT_EQ(items, (std::vector<std::string>{"Audit wf-a.", "Add monitoring.", "Third item"}));
}

TEST(Report, FallbackHasFiveRecommendationsAndFailureNotes) {
  const std::vector<OutcomeView> outs = {
      succeeded("Which workflows fail most? (Suitable for bar chart)", table({{"wf-a", 80}, {"wf-b", 20}}),
                "out/plot_query_1.svg"),
      failed("What is the status mix? (Suitable for bar chart)")};
  const auto doc = fallback_report(outs, "no report model configured");
  EXPECT_TRUE(doc.fallback);
  EXPECT_EQ(doc.recommendations.size(), kRecommendationCount);
  const auto text = doc.to_text();
  EXPECT_NE(text.find("Plot: out/plot_query_1.svg"), std::string::npos);
  EXPECT_NE(text.find("4 attempts"), std::string::npos);
  EXPECT_NE(text.find("column 'status' does not exist"), std::string::npos);
  EXPECT_NE(text.find("80.0%"), std::string::npos);
  for (const char* h : {"INTRODUCTION\n", "ANALYSIS\n", "RECOMMENDATIONS\n", "CONCLUSION\n"}) {
    EXPECT_NE(text.find(h), std::string::npos) << h;
  }
}

TEST(Report, ModelReportIsUsedAndPadded) {
  const std::vector<OutcomeView> outs = {
      succeeded("Which workflows fail most? (Suitable for bar chart)", table({{"wf-a", 80}, {"wf-b", 20}})),
      failed("What is the status mix?")};
  llm::ScriptedBackend b({{llm::Role::report, {llm::ScriptStep::reply(kReport)}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto doc = build_report(outs, &g, {"schema", "out", "svg"});
  EXPECT_FALSE(doc.fallback);
  EXPECT_EQ(doc.introduction, "The jobs table was analyzed.");
  ASSERT_EQ(doc.analyses.size(), 2u);
  EXPECT_NE(doc.analyses[0].insight.find("wf-a dominates"), std::string::npos);
  EXPECT_TRUE(doc.analyses[1].failure_note);
  EXPECT_EQ(doc.recommendations.size(), kRecommendationCount);
  EXPECT_EQ(doc.recommendations[0], "Audit wf-a.");
}

TEST(Report, QuestionTextAppearsOnce) {
  const std::string q = "Which workflows fail most? (Suitable for bar chart)";
  const std::string echo = std::string("INTRODUCTION\nWe asked: ") + q +
                           "\nANALYSIS\nQuery 1: " + q + " The answer is wf-a.\nRECOMMENDATIONS\n1. x\n"
                           "CONCLUSION\nDone.\n";
  llm::ScriptedBackend b({{llm::Role::report, {llm::ScriptStep::reply(echo)}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto text = build_report({succeeded(q, table({{"wf-a", 1}}))}, &g, {"schema", "out", "svg"}).to_text();
  std::size_t hits = 0;
  for (auto pos = text.find("Which workflows fail most"); pos != std::string::npos;
       pos = text.find("Which workflows fail most", pos + 1)) {
    ++hits;
  }
  EXPECT_EQ(hits, 1u) << text;
}

TEST(Report, UnsegmentedResponseFallsBack) {
  llm::ScriptedBackend b({{llm::Role::report, {llm::ScriptStep::reply("Here is a summary without headings.")}}});
  llm::Gateway g(b, llm::default_role_configs());
  const auto doc = build_report({failed("q")}, &g, {"schema", "out", "svg"});
  EXPECT_TRUE(doc.fallback);
  EXPECT_EQ(doc.recommendations.size(), kRecommendationCount);
  EXPECT_TRUE(build_report({failed("q")}, nullptr, {}).fallback);
}

TEST(Report, QueriesResultsBlock) {
  const auto text = format_queries_results({succeeded("Q one", table({{"wf-a", 2}})), failed("Q two")});
  EXPECT_NE(text.find("Q one"), std::string::npos);
  EXPECT_NE(text.find("wf-a"), std::string::npos);
  EXPECT_NE(text.find("Q two"), std::string::npos);
}

TEST(Report, DeterministicInsightForDates) {
  const auto v = succeeded("Daily", table({{"2024-03-01", 2}, {"2024-03-05", 9}}, "day", "n"));
  const auto s = deterministic_insight(v);
  EXPECT_NE(s.find("2024-03-01"), std::string::npos) << s;
  EXPECT_NE(s.find("2024-03-05"), std::string::npos) << s;
}

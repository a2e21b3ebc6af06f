// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.
#include "ctra/agents/pipeline.hpp"
#include "ctra/cli/commands.hpp"
#include "ctra/data/dataset.hpp"
#include "ctra/data/datastore.hpp"
#include "ctra/engine/evaluate.hpp"
#include "ctra/insights/chart.hpp"
#include "ctra/insights/report.hpp"
#include "ctra/llm/backend.hpp"
#include "ctra/llm/extract.hpp"
#include "ctra/llm/gateway.hpp"
#include "ctra/sql/lint.hpp"
#include "ctra/sql/parser.hpp"
#include "ctra/sql/render.hpp"
#include "oracle.hpp"
#include "test_paths.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace ctra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "ctra");
  std::istringstream in;
  std::ostringstream o, e;
  cli::Io io{in, o, e, [](const std::string&) -> std::optional<std::string> { return std::nullopt; }};
  const int rc = cli::run_cli(args, io);
  if (out) *out = o.str() + e.str();
  return rc;
}

const fs::path& corpus_path() {
  static const fs::path p = [] {
    auto dir = testing_paths::scratch_dir("corpus");
    const fs::path file = dir / "jobs.jsonl";
    if (cli({"generate-data", "--seed", "1", "--output", file.string()}) != 0) {
      throw std::runtime_error("generate-data failed");
    }
    return file;
  }();
  return p;
}

const std::vector<data::JobRecord>& corpus() {
  static const auto rows = data::load_dataset(corpus_path(), data::DatasetFormat::jsonl);
  return rows;
}

Outcome a2_means() {
  const std::map<std::string, double> expected = {{"COMPLETED", 8693.34}, {"UNSCHEDULED", 5991.09},
                                                  {"CANCELLED", 3398.24}, {"RUNNING", 3486.02},
                                                  {"IN_ERROR", 41.50},    {"PAUSED", 33.13}};
  const auto q = sql::parse(
      "SELECT state, AVG(EXTRACT(EPOCH FROM (started_timestamp - created_timestamp))) AS avg_creation_to_start_time\n"
      "FROM jobs\nWHERE started_timestamp IS NOT NULL\nGROUP BY state");
  const auto rs = data::execute(q, corpus());
  if (rs.rows.size() != 6) return {false, std::to_string(rs.rows.size()) + " rows"};
  std::string detail;
  bool ok = true;
  for (const auto& row : rs.rows) {
    const std::string state = std::get<std::string>(row[0]);
    const double got = std::get<Decimal>(row[1]).to_double();
    auto it = expected.find(state);
    if (it == expected.end()) return {false, "unexpected state " + state};
    const double rel = std::fabs(got - it->second) / it->second;
    ok = ok && rel <= 0.01;
    detail += state + "=" + fmt(got) + " ";
  }
  return {ok, detail};
}

Outcome error_concentration() {
  const auto q = sql::parse(
      "SELECT workflow_id, SUM(COALESCE(notes->>'error_count', '0')::FLOAT) AS error_count FROM jobs "
      "GROUP BY workflow_id ORDER BY error_count DESC");
  const auto rs = data::execute(q, corpus());
  // brute-force count of ERROR entries straight from the logs
  std::map<std::string, long long> brute;
  for (const auto& r : corpus()) {
    long long n = 0;
    if (r.logs && r.logs->is_array()) {
      for (const auto& e : *r.logs) n += e.value("level", "") == "ERROR" ? 1 : 0;
    }
    brute[r.workflow_id] += n;
  }
  if (rs.rows.size() != brute.size()) return {false, "workflow count mismatch"};
  double total = 0;
  for (const auto& row : rs.rows) {
    const std::string wf = std::get<std::string>(row[0]);
    const double v = std::get<Decimal>(row[1]).to_double();
    if (static_cast<long long>(v) != brute[wf]) return {false, wf + " query " + fmt(v, 0) + " vs logs " + std::to_string(brute[wf])};
    total += v;
  }
  const double top = std::get<Decimal>(rs.rows[0][1]).to_double();
  bool ok = top > 41000 && top / total >= 0.95;
  double lo = 1e18, hi = 0;
  for (std::size_t i = 1; i < rs.rows.size(); ++i) {
    const double v = std::get<Decimal>(rs.rows[i][1]).to_double();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  ok = ok && lo >= 10 && hi <= 330;
  return {ok, std::get<std::string>(rs.rows[0][0]) + "=" + fmt(top, 0) + " share=" + fmt(100 * top / total, 1) +
                  "% others " + fmt(lo, 0) + ".." + fmt(hi, 0)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(7);
  const int cases = 600;
  int discrepancies = 0, errors_agreed = 0;
  std::string first;
  for (int i = 0; i < cases; ++i) {
    auto rows = oracle::random_rows(rng, static_cast<std::size_t>(rng() % 201));
    auto q = oracle::random_query(rng);
    std::optional<data::ResultSet> got;
    bool bind_error = false;
    try {
      got = engine::evaluate(q, rows);
    } catch (const engine::ExecutionError& e) {
      bind_error = e.phase() == engine::ErrorPhase::bind;
    }
    std::optional<oracle::Table> want;
    try {
      want = oracle::oracle_evaluate(q, rows);
    } catch (const oracle::OracleError&) {
    }
    std::string diff;
    if (bind_error) diff = "bind error";
    else if (got.has_value() != want.has_value()) diff = got ? "only oracle failed" : "only engine failed";
    else if (got) diff = oracle::compare(*got, *want);
    else ++errors_agreed;
    if (!diff.empty()) {
      ++discrepancies;
      if (first.empty()) first = diff + " :: " + sql::render(q);
    }
  }
  return {discrepancies == 0, std::to_string(cases) + " cases, " + std::to_string(discrepancies) +
                                  " discrepancies, " + std::to_string(errors_agreed) + " agreed errors" +
                                  (first.empty() ? "" : "; first: " + first)};
}

Outcome lint_corpus() {
  const auto doc = nlohmann::json::parse(slurp(testing_paths::fixture("sql/lint_corpus.json")));
  int rejected = 0, accepted = 0;
  std::string bad;
  for (const auto& item : doc.at("rejected")) {
    const auto check = sql::check_sql(item.at("sql").get<std::string>(), data::jobs_schema());
    const std::string want = item.at("category");
    bool hit = false;
    for (const auto& f : check.findings) hit = hit || sql::to_string(f.category) == want;
    if (!check.report.is_valid && hit) ++rejected;
    else if (bad.empty()) bad = want + ": " + item.at("sql").get<std::string>();
  }
  for (const auto& item : doc.at("accepted")) {
    const auto check = sql::check_sql(item.get<std::string>(), data::jobs_schema());
    if (check.report.is_valid) ++accepted;
    else if (bad.empty()) bad = "rejected valid query: " + item.get<std::string>();
  }
  const bool ok = rejected == static_cast<int>(doc.at("rejected").size()) && rejected >= 20 &&
                  accepted == static_cast<int>(doc.at("accepted").size());
  return {ok, std::to_string(rejected) + "/" + std::to_string(doc.at("rejected").size()) + " rejected as expected, " +
                  std::to_string(accepted) + "/" + std::to_string(doc.at("accepted").size()) + " accepted" +
                  (bad.empty() ? "" : "; " + bad)};
}

Outcome retry_loop() {
  using llm::Role;
  using llm::ScriptStep;
  const std::string question = "[\"How do job counts compare across lab_id values? (Suitable for bar chart)\"]";
  const std::string broken = "```sql\nSELECT lab, COUNT(*) AS n FROM jobs GROUP BY lab\n```";
  const std::string good = "```sql\nSELECT lab_id, COUNT(*) AS job_count FROM jobs GROUP BY lab_id\n```";
  data::InMemoryBackend store(corpus());

  auto attempt = [&](std::vector<ScriptStep> builder, const std::string& dir) {
    llm::ScriptedBackend backend({{Role::question_creation, {ScriptStep::reply(question)}},
                                  {Role::query_builder, std::move(builder)},
                                  {Role::reflect, {ScriptStep::reply("Use lab_id.")}}});
    llm::Gateway gateway(backend, llm::default_role_configs());
    agents::PipelineConfig cfg;
    cfg.num_questions = 1;
    cfg.llm_code_check = false;
    cfg.output_dir = testing_paths::scratch_dir(dir) / "out";
    return agents::run_pipeline(cfg, store, gateway);
  };

  auto recovered = attempt({ScriptStep::reply(broken), ScriptStep::reply(broken), ScriptStep::reply(good)}, "retry-ok");
  auto failed = attempt({ScriptStep::reply(broken)}, "retry-fail");
  const auto& a = recovered.outcomes.at(0);
  const auto& b = failed.outcomes.at(0);
  const std::string text = failed.report.to_text();
  const bool note = text.find("No plot was generated due to errors") != std::string::npos;
  const bool ok = a.attempts == 3 && a.status == agents::OutcomeStatus::succeeded && b.attempts == 4 &&
                  b.status == agents::OutcomeStatus::failed && note && failed.charts.empty();
  return {ok, "recovering: attempts=" + std::to_string(a.attempts) +
                  (a.status == agents::OutcomeStatus::succeeded ? " succeeded" : " failed") +
                  "; always broken: attempts=" + std::to_string(b.attempts) +
                  (b.status == agents::OutcomeStatus::succeeded ? " succeeded" : " failed") +
                  (note ? ", failure note present" : ", failure note missing")};
}

Outcome determinism() {
  const fs::path replay = testing_paths::fixture("replay/bundled.jsonl");
  std::vector<std::map<std::string, std::string>> runs;
  std::string trouble;
  for (const char* name : {"run-a", "run-b"}) {
    const auto dir = testing_paths::scratch_dir(name);
    testing_paths::ScopedCwd cwd(dir);
    std::string out;
    const int rc = cli({"run", "--dataset", corpus_path().string(), "--output-dir", "out", "--llm-mode", "replay",
                        "--replay-file", replay.string()},
                       &out);
    if (rc != 0 && trouble.empty()) trouble = "exit " + std::to_string(rc) + ": " + out;
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir / "out")) files[e.path().filename().string()] = slurp(e.path());
    runs.push_back(std::move(files));
  }
  const auto& a = runs[0];
  std::size_t svgs = 0;
  for (const auto& [k, v] : a) svgs += k.size() > 4 && k.substr(k.size() - 4) == ".svg";
  const bool report_from_model = a.count("report.txt") && a.at("report.txt").rfind("NOTE:", 0) != 0;
  const bool ok = trouble.empty() && a == runs[1] && a.count("report.txt") && svgs == 5 && report_from_model;
  return {ok, std::to_string(a.size()) + " files, " + std::to_string(svgs) + " svg, " +
                  (a == runs[1] ? "byte-identical" : "DIFFERENT") + (report_from_model ? "" : ", report fell back") +
                  (trouble.empty() ? "" : "; " + trouble)};
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

Outcome chart_rules() {
  data::ResultSet rs;
  rs.columns = {{"workflow_id", data::ColumnKind::text, false}, {"error_count", data::ColumnKind::number, false}};
  const int values[] = {5, 90, 12, 300, 41, 7, 66, 250, 19, 3, 120, 88};
  for (int i = 0; i < 12; ++i) {
    rs.rows.push_back({std::string("wf-") + static_cast<char>('a' + i), Decimal(values[i])});
  }
  const auto spec = insights::spec_from_result("Which workflows log the most errors? (Suitable for bar chart)", rs,
                                               "plot_query_1.svg");
  const std::string svg = insights::render_svg(spec);
  std::vector<double> bars;
  for (auto p = svg.find("class=\"bar\""); p != std::string::npos; p = svg.find("class=\"bar\"", p + 1)) {
    const auto v = svg.find("data-value=\"", p);
    bars.push_back(std::stod(svg.substr(v + 12)));
  }
  const bool descending = std::is_sorted(bars.rbegin(), bars.rend());
  data::ResultSet empty;
  empty.columns = rs.columns;
  const std::string placeholder =
      insights::render_svg(insights::spec_from_result("Anything? (Suitable for bar chart)", empty, "plot_query_2.svg"));
  const bool unavailable = placeholder.find(insights::kDataUnavailable) != std::string::npos &&
                           count(placeholder, "class=\"bar\"") == 0;
  return {bars.size() == 10 && descending && unavailable,
          std::to_string(bars.size()) + " bars" + (descending ? " descending" : " unordered") +
              (unavailable ? ", placeholder ok" : ", placeholder missing")};
}

Outcome replay_structure() {
  const auto entries = llm::read_replay_file(testing_paths::fixture("replay/bundled.jsonl"));
  std::map<llm::Role, std::vector<std::string>> by_role;
  for (const auto& e : entries) by_role[e.role].push_back(e.response);
  std::vector<std::string> problems;

  std::vector<std::string> questions;
  try {
    questions = llm::extract_json_array(by_role[llm::Role::question_creation].at(0));
  } catch (const std::exception& e) {
    problems.push_back(std::string("questions: ") + e.what());
  }
  int hinted = 0;
  for (const auto& q : questions) hinted += agents::parse_chart_hint(q) != agents::ChartHint::none;
  if (questions.size() != 5 || hinted != 5) problems.push_back("questions/hints");

  int selects = 0;
  for (const auto& r : by_role[llm::Role::query_builder]) {
    try {
      selects += llm::extract_sql(r).rfind("SELECT", 0) == 0;
    } catch (const llm::ExtractError&) {
    }
  }
  if (selects != static_cast<int>(by_role[llm::Role::query_builder].size())) problems.push_back("sql extraction");

  for (const auto& r : by_role[llm::Role::code_check]) {
    try {
      llm::extract_json_object(r);
    } catch (const llm::ExtractError&) {
      problems.push_back("verdict shape");
    }
  }

  std::size_t recs = 0;
  if (by_role[llm::Role::report].empty()) {
    problems.push_back("no report entry");
  } else {
    auto parsed = insights::parse_report_sections(by_role[llm::Role::report].front());
    if (!parsed) problems.push_back("report sections");
    else recs = insights::parse_recommendations(parsed->recommendations).size();
    if (recs != insights::kRecommendationCount) problems.push_back("recommendations");
  }

  // a replay with only broken queries degrades to failure notes, not a crash
  const auto dir = testing_paths::scratch_dir("adversarial");
  testing_paths::ScopedCwd cwd(dir);
  std::string out;
  const int rc = cli({"run", "--dataset", corpus_path().string(), "--output-dir", "out", "--llm-mode", "replay",
                      "--replay-file", testing_paths::fixture("replay/adversarial.jsonl").string()},
                     &out);
  const std::string report = slurp(dir / "out" / "report.txt");
  if (rc != cli::kExitAllFailed || count(report, "No plot was generated due to errors") != 5) {
    problems.push_back("adversarial replay rc=" + std::to_string(rc));
  }

  std::string detail = std::to_string(entries.size()) + " entries, " + std::to_string(questions.size()) +
                       " questions, " + std::to_string(selects) + " sql, " + std::to_string(recs) + " recommendations";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "state means over the seed-1 corpus", 10, a2_means},
      {2, "error concentration in one workflow", 10, error_concentration},
      {3, "engine matches the reference oracle", 60, oracle_equivalence},
      {4, "lint corpus categories", 5, lint_corpus},
      {5, "bounded retry loop", 0, retry_loop},
      {6, "end-to-end determinism", 0, determinism},
      {7, "chart rules", 0, chart_rules},
      {8, "replay fixture structure", 0, replay_structure},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += "; over " + fmt(c.limit_s, 0) + " s";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.detail << " ("
              << fmt(secs, 2) << " s)\n";
  }
  testing_paths::clear_scratch();
  return failures == 0 ? 0 : 1;
}

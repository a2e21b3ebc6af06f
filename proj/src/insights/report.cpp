#include "ctra/insights/report.hpp"

#include "ctra/insights/chart.hpp"
#include "ctra/llm/extract.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace ctra::insights {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// Removes leading list markers and markdown decoration.
std::string strip_marker(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '#' || line[i] == '*')) ++i;
  std::size_t j = i;
  while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
  if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) {
    i = j + 1;
  } else if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    ++i;
  } else if (line.compare(i, 3, "\xE2\x80\xA2") == 0) {
    i += 3;
  }
  std::string out = trim(std::string_view(line).substr(std::min(i, line.size())));
  while (!out.empty() && out.back() == '*') out.pop_back();
  while (!out.empty() && out.front() == '*') out.erase(0, 1);
  return trim(out);
}

bool is_item_start(const std::string& line) {
  std::size_t i = line.find_first_not_of(" \t");
  if (i == std::string::npos) return false;
  if (line[i] == '-' || line[i] == '*') return i + 1 < line.size() && line[i + 1] == ' ';
  if (line.compare(i, 3, "\xE2\x80\xA2") == 0) return true;
  std::size_t j = i;
  while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
  return j > i && j < line.size() && (line[j] == '.' || line[j] == ')');
}

enum Section { kNone = -1, kIntro, kAnalysis, kRecs, kConclusion };

/// Heading recognised at the start of a line, plus any text after "Heading:".
std::pair<Section, std::string> heading_of(const std::string& line) {
  const std::string t = strip_marker(line);
  static const std::pair<const char*, Section> names[] = {
      {"INTRODUCTION", kIntro},      {"ANALYSIS", kAnalysis},      {"ANALYSES", kAnalysis},
      {"RECOMMENDATIONS", kRecs},    {"RECOMMENDATION", kRecs},    {"CONCLUSIONS", kConclusion},
      {"CONCLUSION", kConclusion}};
  const std::string u = upper(t);
  for (const auto& [name, sec] : names) {
    const std::size_t n = std::char_traits<char>::length(name);
    if (u.rfind(name, 0) != 0) continue;
    std::string rest = t.substr(n);
    while (!rest.empty() && rest.front() == '*') rest.erase(0, 1);
    if (trim(rest).empty()) return {sec, ""};
    if (rest.front() == ':') return {sec, trim(rest.substr(1))};
  }
  return {kNone, ""};
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  if (from.empty()) return;
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
    s.replace(p, from.size(), to);
  }
}

std::string question_body(const std::string& q) {
  std::string t = q;
  const auto open = t.rfind("(Suitable for");
  if (open != std::string::npos) t.erase(open);
  return trim(t);
}

/// Keeps every question's text unique to its own analysis heading.
std::string scrub_questions(std::string text, const std::vector<OutcomeView>& outcomes) {
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const std::string ref = "Query " + std::to_string(i + 1);
    replace_all(text, outcomes[i].question, ref);
    const std::string body = question_body(outcomes[i].question);
    if (body.size() > 12) replace_all(text, body, ref);
  }
  return text;
}

std::string join_paragraph(const std::vector<std::string>& lines) {
  std::string out;
  bool blank = false;
  for (const auto& l : lines) {
    const std::string t = trim(l);
    if (t.empty()) {
      blank = !out.empty();
      continue;
    }
    if (!out.empty()) out += blank ? "\n\n" : "\n";
    blank = false;
    out += t;
  }
  return out;
}

struct Measure {
  std::vector<std::string> labels;
  std::vector<Decimal> values;
  std::string label_name;
  std::string value_name;
};

std::optional<Measure> measure_of(const data::ResultSet& rs) {
  std::size_t value_col = 0;
  for (std::size_t c = 1; c < rs.columns.size(); ++c) {
    if (rs.columns[c].kind == data::ColumnKind::number) {
      value_col = c;
      break;
    }
  }
  if (value_col == 0) return std::nullopt;
  Measure m;
  m.value_name = rs.columns[value_col].name;
  for (std::size_t c = 0; c < value_col; ++c) m.label_name += (c ? " / " : "") + rs.columns[c].name;
  for (const auto& row : rs.rows) {
    std::string label;
    for (std::size_t c = 0; c < value_col; ++c) label += (c ? " / " : "") + data::cell_text(row[c], 6);
    m.labels.push_back(label);
    const auto* d = std::get_if<Decimal>(&row[value_col]);
    m.values.push_back(d ? *d : Decimal(0));
  }
  return m;
}

bool time_labels(const std::vector<std::string>& labels) {
  for (const auto& l : labels) {
    const bool day = l.size() == 10 && l[4] == '-' && l[7] == '-';
    const bool week = l.size() == 8 && l[4] == '-' && l[5] == 'W';
    if (!day && !week) return false;
  }
  return true;
}

std::string failure_text(const OutcomeView& o) {
  std::string s = "The query could not be completed after " + std::to_string(o.attempts) + " attempt" +
                  (o.attempts == 1 ? "" : "s");
  if (!o.error_trail.empty()) s += "; last error: " + o.error_trail.back();
  if (s.back() != '.') s += '.';
  return s + " No plot was generated due to errors.";
}

std::optional<std::string> concentration_recommendation(const OutcomeView& o) {
  if (!o.succeeded || !o.result) return std::nullopt;
  auto m = measure_of(*o.result);
  if (!m || m->values.size() < 2 || time_labels(m->labels)) return std::nullopt;
  Decimal total;
  for (const auto& v : m->values) {
    if (v < Decimal(0)) return std::nullopt;
    total += v;
  }
  if (total.is_zero()) return std::nullopt;
  const auto top = std::max_element(m->values.begin(), m->values.end(),
                                    [](const Decimal& a, const Decimal& b) { return a < b; });
  const Decimal share = *top * Decimal(100) / total;
  if (share < Decimal(50)) return std::nullopt;
  return "Prioritize a root cause review of " + m->label_name + " " +
         m->labels[static_cast<std::size_t>(top - m->values.begin())] + ", which accounts for " +
         share.to_fixed(1) + "% of total " + m->value_name + ".";
}

const std::vector<std::string> kStandardRecommendations = {
    "Review scheduling rules for job states with long creation-to-start delays and rebalance instrument capacity "
    "accordingly.",
    "Add error-level log monitoring per workflow so that concentrated failures are escalated within a shift.",
    "Standardize setup protocols across labs to reduce variance in start and execution times.",
    "Track daily job volumes against staffing and equipment availability to anticipate peak-load bottlenecks.",
    "Re-run failed analyses after correcting their queries so the report covers every planned question.",
};

void pad_recommendations(std::vector<std::string>& recs, const std::vector<OutcomeView>& outcomes) {
  std::vector<std::string> pool;
  for (const auto& o : outcomes) {
    if (auto r = concentration_recommendation(o)) pool.push_back(*r);
  }
  pool.insert(pool.end(), kStandardRecommendations.begin(), kStandardRecommendations.end());
  for (const auto& r : pool) {
    if (recs.size() >= kRecommendationCount) break;
    if (std::find(recs.begin(), recs.end(), r) == recs.end()) recs.push_back(r);
  }
  if (recs.size() > kRecommendationCount) recs.resize(kRecommendationCount);
}

std::size_t succeeded_count(const std::vector<OutcomeView>& outcomes) {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const OutcomeView& o) { return o.succeeded; }));
}

std::string default_introduction(const std::vector<OutcomeView>& outcomes) {
  const std::size_t ok = succeeded_count(outcomes);
  std::string s =
      "This report summarizes operational bottlenecks in the jobs table, which tracks lab job workflows with their "
      "states, timestamps, execution records and logs. It covers " +
      std::to_string(outcomes.size()) + " analytical question" + (outcomes.size() == 1 ? "" : "s") + ", ";
  if (ok == 0) return s + "none of which returned results.";
  return s + "of which " + std::to_string(ok) + " returned results.";
}

std::string default_conclusion(const std::vector<OutcomeView>& outcomes) {
  if (succeeded_count(outcomes) == 0) {
    return "No query produced results, so no bottleneck can be confirmed from the data. Potential causes include "
           "missing data or query errors; correcting the failed queries is the first step.";
  }
  std::string s = "Key findings:";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].succeeded) continue;
    std::string insight = deterministic_insight(outcomes[i]);
    const auto dot = insight.find(". ");
    if (dot != std::string::npos) insight = insight.substr(0, dot + 1);
    s += " Query " + std::to_string(i + 1) + ": " + insight;
  }
  return s + " Addressing these bottlenecks shortens cycle time and reduces rework.";
}

AnalysisSection base_section(const OutcomeView& o) {
  AnalysisSection a;
  a.question = o.question;
  if (o.succeeded && o.result) {
    a.results_table = data::format_table(*o.result);
    a.plot_reference = o.plot_path;
  } else {
    a.failure_note = failure_text(o);
  }
  return a;
}

std::map<std::size_t, std::string> split_analysis(const std::string& analysis) {
  std::map<std::size_t, std::vector<std::string>> chunks;
  std::optional<std::size_t> current;
  for (const auto& line : split_lines(analysis)) {
    const std::string t = strip_marker(line);
    const std::string u = upper(t);
    bool marker = false;
    for (const char* head : {"QUERY ", "QUESTION "}) {
      const std::size_t n = std::char_traits<char>::length(head);
      if (marker || u.rfind(head, 0) != 0) continue;
      std::size_t j = n;
      while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) ++j;
      if (j == n) continue;
      current = std::stoul(t.substr(n, j - n));
      while (j < t.size() && (t[j] == ':' || t[j] == '.' || t[j] == ')' || t[j] == ' ')) ++j;
      if (j < t.size()) {
        chunks[*current].push_back(t.substr(j));
      } else {
        chunks[*current];
      }
      marker = true;
    }
    if (marker || !current) continue;
    // Tables and plot lines are rebuilt from the actual results.
    const bool table = line.find(" | ") != std::string::npos || line.find("---") != std::string::npos;
    const bool plot = u.find("PLOT_QUERY_") != std::string::npos;
    if (!table && !plot) chunks[*current].push_back(line);
  }
  std::map<std::size_t, std::string> out;
  for (auto& [k, lines] : chunks) out[k] = join_paragraph(lines);
  return out;
}

}  // namespace

std::string format_queries_results(const std::vector<OutcomeView>& outcomes) {
  std::string out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (i) out += "\n";
    out += "Query " + std::to_string(i + 1) + ": " + o.question + "\n";
    out += "SQL: " + (o.final_sql ? *o.final_sql : std::string("none")) + "\n";
    out += std::string("Status: ") + (o.succeeded ? "succeeded" : "failed") + " after " +
           std::to_string(o.attempts) + " attempt" + (o.attempts == 1 ? "" : "s") + "\n";
    if (o.succeeded && o.result) {
      out += "Columns: ";
      for (std::size_t c = 0; c < o.result->columns.size(); ++c) out += (c ? ", " : "") + o.result->columns[c].name;
      out += "\nData:\n" + data::format_table(*o.result);
      out += "Plot: " + (o.plot_path ? *o.plot_path : std::string("none")) + "\n";
    } else {
      if (!o.error_trail.empty()) out += "Last error: " + o.error_trail.back() + "\n";
      out += "Plot: none (no plot was generated due to errors)\n";
    }
  }
  return out;
}

std::string deterministic_insight(const OutcomeView& o) {
  if (!o.succeeded || !o.result) return failure_text(o);
  const auto& rs = *o.result;
  if (rs.rows.empty()) {
    return "The query returned no rows. Potential causes include no data matching the filters or a data gap for "
           "the period.";
  }
  auto m = measure_of(rs);
  if (!m) return "The query returned " + std::to_string(rs.rows.size()) + " rows with no numeric column to compare.";
  const auto max_it = std::max_element(m->values.begin(), m->values.end(),
                                       [](const Decimal& a, const Decimal& b) { return a < b; });
  const auto min_it = std::min_element(m->values.begin(), m->values.end(),
                                       [](const Decimal& a, const Decimal& b) { return a < b; });
  const std::string& max_label = m->labels[static_cast<std::size_t>(max_it - m->values.begin())];
  const std::string& min_label = m->labels[static_cast<std::size_t>(min_it - m->values.begin())];
  if (m->values.size() == 1) {
    return "Only one " + m->label_name + " is present (" + max_label + ", " + m->value_name + " " +
           max_it->to_string(2) + ").";
  }
  if (time_labels(m->labels)) {
    Decimal sum;
    for (const auto& v : m->values) sum += v;
    return m->value_name + " peaks at " + max_it->to_string(2) + " on " + max_label + " and is lowest at " +
           min_it->to_string(2) + " on " + min_label + ", averaging " +
           (sum / Decimal(static_cast<std::int64_t>(m->values.size()))).to_string(2) + " over " +
           std::to_string(m->values.size()) + " periods.";
  }
  std::string s = m->label_name + " " + max_label + " has the highest " + m->value_name + " (" + max_it->to_string(2) +
                  ")";
  Decimal total;
  bool non_negative = true;
  for (const auto& v : m->values) {
    non_negative = non_negative && !(v < Decimal(0));
    total += v;
  }
  if (non_negative && !total.is_zero()) {
    s += ", " + (*max_it * Decimal(100) / total).to_fixed(1) + "% of the total across " +
         std::to_string(m->values.size()) + " groups";
  }
  return s + ". The lowest is " + min_label + " (" + min_it->to_string(2) + ").";
}

std::optional<ParsedReport> parse_report_sections(const std::string& text) {
  std::vector<std::string> parts[4];
  Section current = kNone;
  int next_expected = kIntro;
  for (const auto& line : split_lines(text)) {
    auto [sec, rest] = heading_of(line);
    if (sec != kNone && sec >= next_expected) {
      current = sec;
      next_expected = sec + 1;
      if (!rest.empty()) parts[sec].push_back(rest);
      continue;
    }
    if (current != kNone) parts[current].push_back(line);
  }
  if (next_expected <= kConclusion) return std::nullopt;
  ParsedReport r;
  r.introduction = join_paragraph(parts[kIntro]);
  std::string analysis;
  for (const auto& l : parts[kAnalysis]) analysis += l + "\n";
  r.analysis = analysis;
  std::string recs;
  for (const auto& l : parts[kRecs]) recs += l + "\n";
  r.recommendations = recs;
  r.conclusion = join_paragraph(parts[kConclusion]);
  if (r.introduction.empty() || r.conclusion.empty()) return std::nullopt;
  return r;
}

std::vector<std::string> parse_recommendations(const std::string& section) {
  std::vector<std::string> items;
  const auto lines = split_lines(section);
  const bool bulleted = std::any_of(lines.begin(), lines.end(), is_item_start);
  for (const auto& line : lines) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!bulleted || is_item_start(line) || items.empty()) {
      items.push_back(strip_marker(line));
    } else {
      items.back() += " " + t;
    }
  }
  items.erase(std::remove_if(items.begin(), items.end(), [](const std::string& s) { return s.empty(); }),
              items.end());
  return items;
}

ReportDocument fallback_report(const std::vector<OutcomeView>& outcomes, std::string reason) {
  ReportDocument doc;
  doc.fallback = true;
  doc.fallback_reason = std::move(reason);
  doc.introduction = default_introduction(outcomes);
  for (const auto& o : outcomes) {
    AnalysisSection a = base_section(o);
    a.insight = o.succeeded ? deterministic_insight(o) : "";
    doc.analyses.push_back(std::move(a));
  }
  pad_recommendations(doc.recommendations, outcomes);
  doc.conclusion = default_conclusion(outcomes);
  return doc;
}

ReportDocument build_report(const std::vector<OutcomeView>& outcomes, llm::Gateway* gateway,
                            const ReportContext& ctx) {
  if (!gateway) return fallback_report(outcomes, "no report model configured");
  llm::PromptContext pc;
  pc.table_schema = ctx.table_schema;
  pc.queries_results = format_queries_results(outcomes);
  pc.output_dir = ctx.output_dir;
  pc.plot_extension = ctx.plot_extension;
  std::string raw;
  try {
    raw = gateway->render_and_complete(llm::Role::report, pc);
  } catch (const llm::LlmError& e) {
    return fallback_report(outcomes, std::string("report model call failed: ") + e.what());
  }
  const auto parsed = parse_report_sections(llm::strip_think(raw));
  if (!parsed) return fallback_report(outcomes, "report response lacked the four section headings");

  ReportDocument doc;
  doc.introduction = scrub_questions(parsed->introduction, outcomes);
  const auto chunks = split_analysis(parsed->analysis);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    AnalysisSection a = base_section(outcomes[i]);
    auto it = chunks.find(i + 1);
    std::string prose = it == chunks.end() ? "" : scrub_questions(it->second, outcomes);
    if (outcomes[i].succeeded) {
      a.insight = prose.empty() ? deterministic_insight(outcomes[i]) : prose;
    } else {
      a.insight = prose;
    }
    doc.analyses.push_back(std::move(a));
  }
  for (auto& r : parse_recommendations(parsed->recommendations)) {
    doc.recommendations.push_back(scrub_questions(r, outcomes));
  }
  if (doc.recommendations.size() > kRecommendationCount) doc.recommendations.resize(kRecommendationCount);
  pad_recommendations(doc.recommendations, outcomes);
  doc.conclusion = scrub_questions(parsed->conclusion, outcomes);
  return doc;
}

std::string ReportDocument::to_text() const {
  std::string out;
  if (fallback) out += "NOTE: assembled without the report model (" + fallback_reason + ").\n\n";
  out += "INTRODUCTION\n" + introduction + "\n\nANALYSIS\n";
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    const auto& a = analyses[i];
    out += "\nQuery " + std::to_string(i + 1) + ": " + a.question + "\n";
    if (a.failure_note) {
      out += "Results: none\n";
      if (!a.insight.empty()) out += "Insight: " + a.insight + "\n";
      out += "Note: " + *a.failure_note + "\n";
      continue;
    }
    out += "Results:\n" + a.results_table;
    out += "Insight: " + a.insight + "\n";
    out += "Plot: " + (a.plot_reference ? *a.plot_reference : std::string("none (no chart requested)")) + "\n";
  }
  out += "\nRECOMMENDATIONS\n";
  for (std::size_t i = 0; i < recommendations.size(); ++i) {
    out += std::to_string(i + 1) + ". " + recommendations[i] + "\n";
  }
  out += "\nCONCLUSION\n" + conclusion + "\n";
  return out;
}

}  // namespace ctra::insights

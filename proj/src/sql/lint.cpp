#include "ctra/sql/lint.hpp"

#include "ctra/sql/binder.hpp"
#include "ctra/sql/parser.hpp"
#include "ctra/sql/render.hpp"

#include <algorithm>

namespace ctra::sql {

ValidationReport ValidationReport::from_findings(const std::vector<Finding>& findings) {
  ValidationReport r;
  for (const auto& f : findings) {
    r.errors.push_back(f.error);
    if (!f.suggestion.empty() &&
        std::find(r.suggestions.begin(), r.suggestions.end(), f.suggestion) == r.suggestions.end()) {
      r.suggestions.push_back(f.suggestion);
    }
  }
  r.is_valid = r.errors.empty();
  return r;
}

nlohmann::ordered_json ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["is_valid"] = is_valid;
  j["errors"] = errors;
  j["suggestions"] = suggestions;
  return j;
}

std::string ValidationReport::dump() const { return to_json().dump(4); }

namespace {

void check_json_bases(const Expr& e, std::vector<Finding>& out) {
  if (e.kind == ExprKind::json_access && e.args[0].kind != ExprKind::column) {
    out.push_back({IssueCategory::jsonb_access,
                   "JSONB access must be applied directly to a JSONB column, not to " +
                       render_expr(e.args[0]),
                   "Use <jsonb_column>->>'key' with a top-level key"});
  }
  for (const auto& a : e.args) check_json_bases(a, out);
}

}  // namespace

std::vector<Finding> lint_findings(const QueryAst& ast, const data::TableSchema& schema) {
  const BoundQuery bound = bind(ast, schema);
  std::vector<Finding> findings = bound.findings;

  const std::size_t n = ast.select_items.size();
  if (n < 2 || n > 3) {
    findings.push_back({IssueCategory::column_count,
                        "query returns " + std::to_string(n) + " column" + (n == 1 ? "" : "s") +
                            ", need 2-3",
                        n < 2 ? "Add a grouping category or aggregate value so the result has 2-3 "
                                "columns (e.g. category, value)"
                              : "Keep only the 2-3 columns needed for visualization"});
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (bound.select_types[i] != SqlType::timestamp) continue;
    const std::string expr = render_expr(ast.select_items[i].expr);
    findings.push_back({IssueCategory::timestamp_output,
                        "timestamp output '" + expr + "' must be converted to a string with TO_CHAR",
                        "Use TO_CHAR(" + expr + ", 'YYYY-MM-DD')"});
  }

  for (const auto& item : ast.select_items) check_json_bases(item.expr, findings);
  if (ast.where_clause) check_json_bases(*ast.where_clause, findings);
  for (const auto& g : ast.group_by) check_json_bases(g, findings);
  for (const auto& o : ast.order_by) check_json_bases(o.expr, findings);

  return findings;
}

ValidationReport lint(const QueryAst& ast, const data::TableSchema& schema) {
  return ValidationReport::from_findings(lint_findings(ast, schema));
}

SqlCheck check_sql(std::string_view sql, const data::TableSchema& schema) {
  SqlCheck out;
  try {
    out.ast = parse(sql);
  } catch (const ParseError& e) {
    out.parse_error_offset = e.offset();
    std::string suggestion;
    switch (e.category()) {
      case IssueCategory::cte:
      case IssueCategory::subquery:
        suggestion = "Rewrite as a single top-level SELECT without CTEs or subqueries";
        break;
      case IssueCategory::window_function:
        suggestion = "Replace the window function with GROUP BY aggregates";
        break;
      case IssueCategory::nested_jsonb:
        suggestion = "Access only top-level JSONB keys, e.g. COALESCE(execution_records->>'duration', '0')::FLOAT";
        break;
      case IssueCategory::not_select:
        suggestion = "Start the query with SELECT";
        break;
      default: break;
    }
    out.findings.push_back({e.category(), e.what(), suggestion});
    out.report = ValidationReport::from_findings(out.findings);
    return out;
  }
  out.findings = lint_findings(*out.ast, schema);
  out.report = ValidationReport::from_findings(out.findings);
  return out;
}

}  // namespace ctra::sql

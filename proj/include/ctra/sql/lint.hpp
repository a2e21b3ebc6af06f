#pragma once

#include "ctra/data/schema.hpp"
#include "ctra/sql/ast.hpp"
#include "ctra/sql/issue.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctra::sql {

/// `{is_valid, errors, suggestions}` verdict; is_valid iff errors is empty.
struct ValidationReport {
  bool is_valid = true;
  std::vector<std::string> errors;
  std::vector<std::string> suggestions;

  static ValidationReport from_findings(const std::vector<Finding>& findings);

  nlohmann::ordered_json to_json() const;
  /// Pretty-printed with four-space indentation, keys in is_valid/errors/suggestions order.
  std::string dump() const;
};

/// Schema and pipeline-policy checks: binding/typing, 2-3 output columns,
/// GROUP BY coverage, TO_CHAR on timestamp outputs, JSONB access on JSONB columns.
std::vector<Finding> lint_findings(const QueryAst& ast, const data::TableSchema& schema);
ValidationReport lint(const QueryAst& ast, const data::TableSchema& schema);

/// parse + lint. A ParseError becomes a single finding.
struct SqlCheck {
  std::optional<QueryAst> ast;
  std::vector<Finding> findings;
  std::optional<std::size_t> parse_error_offset;
  ValidationReport report;
};

SqlCheck check_sql(std::string_view sql, const data::TableSchema& schema);

}  // namespace ctra::sql

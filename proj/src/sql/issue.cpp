#include "ctra/sql/issue.hpp"

namespace ctra::sql {

std::string_view to_string(IssueCategory c) {
  switch (c) {
    case IssueCategory::syntax: return "syntax";
    case IssueCategory::not_select: return "not_select";
    case IssueCategory::multiple_statements: return "multiple_statements";
    case IssueCategory::cte: return "cte";
    case IssueCategory::subquery: return "subquery";
    case IssueCategory::window_function: return "window_function";
    case IssueCategory::join: return "join";
    case IssueCategory::unsupported_construct: return "unsupported_construct";
    case IssueCategory::unsupported_function: return "unsupported_function";
    case IssueCategory::nested_jsonb: return "nested_jsonb";
    case IssueCategory::unknown_table: return "unknown_table";
    case IssueCategory::unknown_column: return "unknown_column";
    case IssueCategory::column_count: return "column_count";
    case IssueCategory::missing_group_by: return "missing_group_by";
    case IssueCategory::aggregate_misuse: return "aggregate_misuse";
    case IssueCategory::timestamp_output: return "timestamp_output";
    case IssueCategory::jsonb_access: return "jsonb_access";
    case IssueCategory::type_mismatch: return "type_mismatch";
    case IssueCategory::unsupported_format: return "unsupported_format";
  }
  return "unknown";
}

ParseError::ParseError(std::size_t offset, IssueCategory category, std::string message)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message),
      offset_(offset),
      category_(category),
      message_(std::move(message)) {}

}  // namespace ctra::sql

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctra::sql {

/// Coarse classification of why a query was rejected.
enum class IssueCategory {
  syntax,
  not_select,
  multiple_statements,
  cte,
  subquery,
  window_function,
  join,
  unsupported_construct,
  unsupported_function,
  nested_jsonb,
  unknown_table,
  unknown_column,
  column_count,
  missing_group_by,
  aggregate_misuse,
  timestamp_output,
  jsonb_access,
  type_mismatch,
  unsupported_format,
};

std::string_view to_string(IssueCategory c);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, IssueCategory category, std::string message);

  std::size_t offset() const { return offset_; }
  IssueCategory category() const { return category_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t offset_;
  IssueCategory category_;
  std::string message_;
};

/// One problem found while binding or linting.
struct Finding {
  IssueCategory category;
  std::string error;
  std::string suggestion;  // empty when no concrete fix is known
};

}  // namespace ctra::sql

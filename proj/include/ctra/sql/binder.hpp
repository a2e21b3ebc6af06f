#pragma once

#include "ctra/data/schema.hpp"
#include "ctra/sql/ast.hpp"
#include "ctra/sql/issue.hpp"

#include <optional>
#include <unordered_map>
#include <vector>

namespace ctra::sql {

enum class SqlType { boolean, number, text, timestamp, interval, json, error };

std::string_view to_string(SqlType t);

/// Name resolution and type analysis of a parsed query against a schema.
/// Both the linter and the query engine consume this; a query with no
/// findings is guaranteed to be executable.
struct BoundQuery {
  struct OrderKey {
    const Expr* expr = nullptr;                 // expression to evaluate, or
    std::optional<std::size_t> select_index;    // reference to an output column
    SortDirection direction = SortDirection::asc;
  };

  std::vector<SqlType> select_types;
  std::vector<const Expr*> group_keys;  // aliases resolved
  std::vector<OrderKey> order_keys;
  bool aggregated = false;

  /// Type of every expression node after literal coercion.
  std::unordered_map<const Expr*, SqlType> types;
  /// Schema column index of every column-reference node.
  std::unordered_map<const Expr*, std::size_t> columns;

  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  SqlType type_of(const Expr& e) const;
};

/// The returned object holds pointers into `query`; keep it alive.
BoundQuery bind(const QueryAst& query, const data::TableSchema& schema);

/// Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Nearest schema column within `max_distance` edits, if any.
std::optional<std::string> nearest_column(std::string_view name, const data::TableSchema& schema,
                                          std::size_t max_distance = 3);

}  // namespace ctra::sql

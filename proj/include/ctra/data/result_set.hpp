#pragma once

#include "ctra/core/decimal.hpp"

#include <string>
#include <variant>
#include <vector>

namespace ctra::data {

enum class ColumnKind { text, number };

struct ResultColumn {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  bool nullable = true;

  friend bool operator==(const ResultColumn&, const ResultColumn&) = default;
};

/// NULL, text, or number.
using ResultCell = std::variant<std::monostate, std::string, Decimal>;
using ResultRow = std::vector<ResultCell>;

struct ResultSet {
  std::vector<ResultColumn> columns;
  std::vector<ResultRow> rows;

  std::size_t column_count() const { return columns.size(); }
  bool empty() const { return rows.empty(); }
};

bool is_null(const ResultCell& c);
/// Display text: "NULL", the string, or the number with up to `max_fraction` digits.
std::string cell_text(const ResultCell& c, int max_fraction = 2);

/// Total order used for canonical row sorting: NULL < number < text; numbers by value.
int compare_cells(const ResultCell& a, const ResultCell& b);

/// Rows sorted lexicographically with compare_cells.
ResultSet canonical_order(ResultSet rs);

/// Fixed-width plain-text table (header, rule, rows).
std::string format_table(const ResultSet& rs, std::size_t max_rows = 25);

}  // namespace ctra::data

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ctra::sql {

enum class ExprKind {
  column,          // name
  string_literal,  // name holds the unescaped value
  number_literal,  // name holds the literal text, e.g. "-1.5"
  star,            // only as COUNT(*) argument
  function_call,   // fn + args
  binary,          // op + args[0], args[1]
  is_null,         // negated for IS NOT NULL; args[0]
  json_access,     // json_op; args[0] base; name holds the key
  cast,            // cast_type; args[0]
};

enum class BinaryOp { add, sub, mul, div, eq, ne, lt, le, gt, ge, logical_and, logical_or };

/// EXTRACT(EPOCH FROM (a - b)) is `extract_epoch` with args {a, b}.
enum class Function { to_char, extract_epoch, coalesce, avg, count, sum, min, max };

enum class JsonOp { arrow, arrow_text };  // -> and ->>

enum class CastType { float_type, numeric_type };

struct Expr {
  ExprKind kind = ExprKind::column;
  std::string name;
  BinaryOp op = BinaryOp::add;
  Function fn = Function::count;
  JsonOp json_op = JsonOp::arrow_text;
  CastType cast_type = CastType::float_type;
  bool negated = false;
  std::vector<Expr> args;
  std::size_t offset = 0;  // byte offset in the source text; ignored by ==

  static Expr column(std::string name, std::size_t offset = 0);
  static Expr string_lit(std::string value, std::size_t offset = 0);
  static Expr number_lit(std::string text, std::size_t offset = 0);
  static Expr star(std::size_t offset = 0);
  static Expr call(Function fn, std::vector<Expr> args, std::size_t offset = 0);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs, std::size_t offset = 0);
  static Expr is_null_test(Expr operand, bool negated, std::size_t offset = 0);
  static Expr json(Expr base, JsonOp op, std::string key, std::size_t offset = 0);
  static Expr cast(Expr operand, CastType type, std::size_t offset = 0);

  /// Structural equality (offsets ignored).
  friend bool operator==(const Expr& a, const Expr& b);
};

bool is_aggregate(Function fn);
bool contains_aggregate(const Expr& e);
std::string_view function_name(Function fn);
std::string_view binary_op_text(BinaryOp op);

struct SelectItem {
  Expr expr;
  std::optional<std::string> alias;

  friend bool operator==(const SelectItem&, const SelectItem&) = default;
};

enum class SortDirection { asc, desc };

struct OrderItem {
  Expr expr;
  SortDirection direction = SortDirection::asc;

  friend bool operator==(const OrderItem&, const OrderItem&) = default;
};

/// A single top-level SELECT from the constrained subset.
struct QueryAst {
  std::vector<SelectItem> select_items;
  std::string from_table;
  std::optional<Expr> where_clause;
  std::vector<Expr> group_by;
  std::vector<OrderItem> order_by;
  std::optional<long long> limit;

  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

/// Output column name PostgreSQL would assign: alias, column name, function name, or "?column?".
std::string output_name(const SelectItem& item);

}  // namespace ctra::sql

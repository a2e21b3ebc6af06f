#include "ctra/sql/render.hpp"

#include "lexer.hpp"

#include <cctype>

namespace ctra::sql {

namespace {

// Binding strength; higher binds tighter.
int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::binary:
      switch (e.op) {
        case BinaryOp::logical_or: return 1;
        case BinaryOp::logical_and: return 2;
        case BinaryOp::add:
        case BinaryOp::sub: return 4;
        case BinaryOp::mul:
        case BinaryOp::div: return 5;
        default: return 3;
      }
    case ExprKind::is_null: return 3;
    case ExprKind::json_access:
    case ExprKind::cast: return 6;
    default: return 7;
  }
}

std::string quote_string(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string emit(const Expr& e, int min_prec);

std::string emit_binary(const Expr& e) {
  const int p = precedence(e);
  int lhs_min = p, rhs_min = p + 1;
  if (p == 3) lhs_min = rhs_min = 4;  // comparisons do not chain
  return emit(e.args[0], lhs_min) + " " + std::string(binary_op_text(e.op)) + " " +
         emit(e.args[1], rhs_min);
}

std::string emit_call(const Expr& e) {
  std::string out(function_name(e.fn));
  if (e.fn == Function::extract_epoch) {
    return out + "(EPOCH FROM (" + emit(e.args[0], 4) + " - " + emit(e.args[1], 5) + "))";
  }
  out += "(";
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i) out += ", ";
    out += emit(e.args[i], 0);
  }
  return out + ")";
}

std::string emit(const Expr& e, int min_prec) {
  std::string s;
  switch (e.kind) {
    case ExprKind::column: s = quote_identifier(e.name); break;
    case ExprKind::string_literal: s = quote_string(e.name); break;
    case ExprKind::number_literal: s = e.name; break;
    case ExprKind::star: s = "*"; break;
    case ExprKind::function_call: s = emit_call(e); break;
    case ExprKind::binary: s = emit_binary(e); break;
    case ExprKind::is_null:
      s = emit(e.args[0], 4) + (e.negated ? " IS NOT NULL" : " IS NULL");
      break;
    case ExprKind::json_access:
      s = emit(e.args[0], 7) + (e.json_op == JsonOp::arrow ? "->" : "->>") + quote_string(e.name);
      break;
    case ExprKind::cast:
      s = emit(e.args[0], 7) + (e.cast_type == CastType::float_type ? "::FLOAT" : "::NUMERIC");
      break;
  }
  if (precedence(e) < min_prec) return "(" + s + ")";
  return s;
}

}  // namespace

std::string quote_identifier(const std::string& name) {
  bool plain = !name.empty() &&
               (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  std::string upper;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$')) plain = false;
    upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (plain && !detail::is_reserved_word(upper)) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_expr(const Expr& expr) { return emit(expr, 0); }

std::string render(const QueryAst& q) {
  std::string out = "SELECT ";
  for (std::size_t i = 0; i < q.select_items.size(); ++i) {
    if (i) out += ", ";
    out += render_expr(q.select_items[i].expr);
    if (q.select_items[i].alias) out += " AS " + quote_identifier(*q.select_items[i].alias);
  }
  out += " FROM " + quote_identifier(q.from_table);
  if (q.where_clause) out += " WHERE " + render_expr(*q.where_clause);
  if (!q.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < q.group_by.size(); ++i) {
      if (i) out += ", ";
      out += render_expr(q.group_by[i]);
    }
  }
  if (!q.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < q.order_by.size(); ++i) {
      if (i) out += ", ";
      out += render_expr(q.order_by[i].expr);
      if (q.order_by[i].direction == SortDirection::desc) out += " DESC";
    }
  }
  if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
  return out;
}

}  // namespace ctra::sql

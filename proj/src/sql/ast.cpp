#include "ctra/sql/ast.hpp"

#include <cctype>

namespace ctra::sql {

Expr Expr::column(std::string name, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::column;
  e.name = std::move(name);
  e.offset = offset;
  return e;
}

Expr Expr::string_lit(std::string value, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::string_literal;
  e.name = std::move(value);
  e.offset = offset;
  return e;
}

Expr Expr::number_lit(std::string text, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::number_literal;
  e.name = std::move(text);
  e.offset = offset;
  return e;
}

Expr Expr::star(std::size_t offset) {
  Expr e;
  e.kind = ExprKind::star;
  e.offset = offset;
  return e;
}

Expr Expr::call(Function fn, std::vector<Expr> args, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::function_call;
  e.fn = fn;
  e.args = std::move(args);
  e.offset = offset;
  return e;
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::binary;
  e.op = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.offset = offset;
  return e;
}

Expr Expr::is_null_test(Expr operand, bool negated, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::is_null;
  e.negated = negated;
  e.args.push_back(std::move(operand));
  e.offset = offset;
  return e;
}

Expr Expr::json(Expr base, JsonOp op, std::string key, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::json_access;
  e.json_op = op;
  e.name = std::move(key);
  e.args.push_back(std::move(base));
  e.offset = offset;
  return e;
}

Expr Expr::cast(Expr operand, CastType type, std::size_t offset) {
  Expr e;
  e.kind = ExprKind::cast;
  e.cast_type = type;
  e.args.push_back(std::move(operand));
  e.offset = offset;
  return e;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::column:
    case ExprKind::string_literal:
    case ExprKind::number_literal:
      if (a.name != b.name) return false;
      break;
    case ExprKind::star: break;
    case ExprKind::function_call:
      if (a.fn != b.fn) return false;
      break;
    case ExprKind::binary:
      if (a.op != b.op) return false;
      break;
    case ExprKind::is_null:
      if (a.negated != b.negated) return false;
      break;
    case ExprKind::json_access:
      if (a.json_op != b.json_op || a.name != b.name) return false;
      break;
    case ExprKind::cast:
      if (a.cast_type != b.cast_type) return false;
      break;
  }
  return a.args == b.args;
}

bool is_aggregate(Function fn) {
  switch (fn) {
    case Function::avg:
    case Function::count:
    case Function::sum:
    case Function::min:
    case Function::max: return true;
    default: return false;
  }
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::function_call && is_aggregate(e.fn)) return true;
  for (const auto& a : e.args) {
    if (contains_aggregate(a)) return true;
  }
  return false;
}

std::string_view function_name(Function fn) {
  switch (fn) {
    case Function::to_char: return "TO_CHAR";
    case Function::extract_epoch: return "EXTRACT";
    case Function::coalesce: return "COALESCE";
    case Function::avg: return "AVG";
    case Function::count: return "COUNT";
    case Function::sum: return "SUM";
    case Function::min: return "MIN";
    case Function::max: return "MAX";
  }
  return "?";
}

std::string_view binary_op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::eq: return "=";
    case BinaryOp::ne: return "<>";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::logical_and: return "AND";
    case BinaryOp::logical_or: return "OR";
  }
  return "?";
}

std::string output_name(const SelectItem& item) {
  if (item.alias) return *item.alias;
  const Expr* e = &item.expr;
  while (e->kind == ExprKind::cast) e = &e->args[0];
  switch (e->kind) {
    case ExprKind::column: return e->name;
    case ExprKind::function_call: {
      std::string n(function_name(e->fn));
      for (auto& ch : n) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      return n;
    }
    default: return "?column?";
  }
}

}  // namespace ctra::sql

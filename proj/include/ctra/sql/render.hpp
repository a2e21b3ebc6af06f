#pragma once

#include "ctra/sql/ast.hpp"

#include <string>

namespace ctra::sql {

/// Canonical single-line SQL. parse(render(q)) == q for every parseable q.
std::string render(const QueryAst& query);
std::string render_expr(const Expr& expr);

/// Bare identifier when possible, double-quoted otherwise.
std::string quote_identifier(const std::string& name);

}  // namespace ctra::sql

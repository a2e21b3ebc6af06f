#pragma once

#include "ctra/sql/ast.hpp"
#include "ctra/sql/issue.hpp"

#include <string_view>

namespace ctra::sql {

/// Parses one SELECT statement of the supported subset. A single trailing
/// semicolon is allowed. Throws ParseError with the byte offset of the
/// offending token.
QueryAst parse(std::string_view sql);

}  // namespace ctra::sql

#pragma once

#include "ctra/llm/errors.hpp"
#include "ctra/sql/lint.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ctra::llm {

/// Drops `<think>...</think>` blocks emitted by reasoning models.
std::string strip_think(std::string_view raw);

/// First parseable JSON array of strings in `raw`.
/// Throws ExtractError no_json_found / wrong_shape.
std::vector<std::string> extract_json_array(std::string_view raw);

/// First parseable object with boolean is_valid and string-list errors/suggestions.
/// is_valid is forced false when errors are present.
sql::ValidationReport extract_json_object(std::string_view raw);

/// First parseable JSON object of any shape. Throws no_json_found.
nlohmann::json extract_any_json_object(std::string_view raw);

/// The first SELECT statement: fences, prose and the trailing semicolon removed,
/// blank lines dropped. Throws ExtractError no_select_found. Idempotent.
std::string extract_sql(std::string_view raw);

}  // namespace ctra::llm

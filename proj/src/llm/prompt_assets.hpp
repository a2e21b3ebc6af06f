#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace ctra::llm::detail {

/// (asset name, text) pairs generated from assets/prompts at configure time.
const std::vector<std::pair<std::string_view, std::string_view>>& prompt_assets();

}  // namespace ctra::llm::detail

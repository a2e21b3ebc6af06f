#pragma once

#include "ctra/sql/issue.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ctra::sql::detail {

enum class TokenType {
  identifier,         // bare word (keywords included; see Token::upper)
  quoted_identifier,  // "name"
  string,             // '...', unescaped
  number,
  symbol,             // punctuation and operators
  end,
};

struct Token {
  TokenType type = TokenType::end;
  std::string text;   // raw text for symbols/numbers/identifiers, value for strings
  std::string upper;  // upper-cased identifier text
  std::size_t offset = 0;

  bool is_keyword(std::string_view kw) const {
    return type == TokenType::identifier && upper == kw;
  }
  bool is_symbol(std::string_view s) const { return type == TokenType::symbol && text == s; }
};

bool is_reserved_word(std::string_view upper);

/// Splits SQL text into tokens; comments are dropped. Always ends with an `end` token.
std::vector<Token> tokenize(std::string_view sql);

}  // namespace ctra::sql::detail

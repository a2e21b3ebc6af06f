#include "lexer.hpp"

#include <cctype>

namespace ctra::sql::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_part(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool is_reserved_word(std::string_view upper) {
  static constexpr std::string_view kReserved[] = {
      "SELECT", "FROM",  "WHERE",  "GROUP",     "BY",      "ORDER",    "HAVING", "LIMIT",
      "OFFSET", "AS",    "ASC",    "DESC",      "AND",     "OR",       "NOT",    "IS",
      "NULL",   "WITH",  "JOIN",   "INNER",     "LEFT",    "RIGHT",    "FULL",   "OUTER",
      "CROSS",  "ON",    "UNION",  "INTERSECT", "EXCEPT",  "DISTINCT", "CASE",   "WHEN",
      "THEN",   "ELSE",  "END",    "IN",        "LIKE",    "ILIKE",    "BETWEEN", "EXISTS",
      "OVER",   "PARTITION", "NULLS", "FILTER", "TRUE",    "FALSE"};
  for (auto kw : kReserved) {
    if (upper == kw) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) {
        throw ParseError(i, IssueCategory::syntax, "unterminated block comment");
      }
      i = close + 2;
      continue;
    }

    Token t;
    t.offset = i;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_part(sql[j])) ++j;
      t.type = TokenType::identifier;
      t.text = std::string(sql.substr(i, j - i));
      t.upper = t.text;
      for (auto& ch : t.upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      i = j;
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string value;
      while (true) {
        if (j >= n) throw ParseError(i, IssueCategory::syntax, "unterminated quoted identifier");
        if (sql[j] == '"') {
          if (j + 1 < n && sql[j + 1] == '"') {
            value += '"';
            j += 2;
            continue;
          }
          break;
        }
        value += sql[j++];
      }
      if (value.empty()) throw ParseError(i, IssueCategory::syntax, "empty quoted identifier");
      t.type = TokenType::quoted_identifier;
      t.text = std::move(value);
      i = j + 1;
    } else if (c == '\'') {
      std::size_t j = i + 1;
      std::string value;
      while (true) {
        if (j >= n) throw ParseError(i, IssueCategory::syntax, "unterminated string literal");
        if (sql[j] == '\'') {
          if (j + 1 < n && sql[j + 1] == '\'') {
            value += '\'';
            j += 2;
            continue;
          }
          break;
        }
        value += sql[j++];
      }
      t.type = TokenType::string;
      t.text = std::move(value);
      i = j + 1;
    } else if (digit(c) || (c == '.' && i + 1 < n && digit(sql[i + 1]))) {
      std::size_t j = i;
      while (j < n && digit(sql[j])) ++j;
      if (j < n && sql[j] == '.') {
        ++j;
        while (j < n && digit(sql[j])) ++j;
      }
      if (j < n && (sql[j] == 'e' || sql[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (sql[k] == '+' || sql[k] == '-')) ++k;
        if (k < n && digit(sql[k])) {
          while (k < n && digit(sql[k])) ++k;
          j = k;
        }
      }
      if (j < n && ident_start(sql[j])) {
        throw ParseError(j, IssueCategory::syntax, "trailing junk after numeric literal");
      }
      t.type = TokenType::number;
      t.text = std::string(sql.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::string_view kMulti[] = {"->>", "->", "::", "<>", "!=", "<=",
                                                    ">=", "#>>", "#>", "||", "@>", "<@"};
      t.type = TokenType::symbol;
      for (std::string_view m : kMulti) {
        if (sql.substr(i, m.size()) == m) {
          t.text = std::string(m);
          break;
        }
      }
      if (t.text.empty()) t.text = std::string(1, c);
      i += t.text.size();
    }
    tokens.push_back(std::move(t));
  }
  Token end;
  end.type = TokenType::end;
  end.offset = n;
  tokens.push_back(end);
  return tokens;
}

}  // namespace ctra::sql::detail

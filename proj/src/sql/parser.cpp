#include "ctra/sql/parser.hpp"

#include "lexer.hpp"

#include <array>
#include <charconv>

namespace ctra::sql {

namespace {

using detail::Token;
using detail::TokenType;

constexpr std::array<std::string_view, 11> kWindowFunctions = {
    "ROW_NUMBER", "RANK", "DENSE_RANK", "NTILE", "LAG", "LEAD", "FIRST_VALUE",
    "LAST_VALUE", "NTH_VALUE", "PERCENT_RANK", "CUME_DIST"};

bool reserved(const Token& t) {
  return t.type == TokenType::identifier && detail::is_reserved_word(t.upper);
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(detail::tokenize(sql)) {}

  QueryAst parse_query() {
    if (peek().is_keyword("WITH")) {
      fail(IssueCategory::cte, "WITH clauses (CTEs) are not allowed; write a single top-level SELECT");
    }
    if (peek().type == TokenType::end) fail(IssueCategory::not_select, "empty query");
    if (!peek().is_keyword("SELECT")) {
      fail(IssueCategory::not_select, "query must start with SELECT");
    }
    advance();

    QueryAst q;
    if (peek().is_keyword("DISTINCT")) {
      fail(IssueCategory::unsupported_construct, "SELECT DISTINCT is not supported");
    }
    if (peek().is_symbol("*")) {
      fail(IssueCategory::unsupported_construct,
           "SELECT * is not supported; list the 2-3 output columns explicitly");
    }
    do {
      q.select_items.push_back(parse_select_item());
    } while (accept_symbol(","));

    if (peek().type == TokenType::end || peek().is_symbol(";")) {
      fail(IssueCategory::syntax, "missing FROM clause");
    }
    expect_keyword("FROM");
    if (peek().is_symbol("(")) {
      fail(IssueCategory::subquery, "subqueries are not allowed in FROM");
    }
    q.from_table = parse_identifier("table name");
    if (peek().is_symbol(".")) {
      fail(IssueCategory::unsupported_construct, "schema-qualified table names are not supported");
    }
    if (peek().is_symbol(",") || peek().is_keyword("JOIN") || peek().is_keyword("INNER") ||
        peek().is_keyword("LEFT") || peek().is_keyword("RIGHT") || peek().is_keyword("FULL") ||
        peek().is_keyword("CROSS")) {
      fail(IssueCategory::join, "joins are not supported; query the jobs table only");
    }
    if (peek().type == TokenType::identifier && !reserved(peek())) {
      fail(IssueCategory::unsupported_construct, "table aliases are not supported");
    }

    if (accept_keyword("WHERE")) q.where_clause = parse_expr();

    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        reject_positional("GROUP BY");
        q.group_by.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (peek().is_keyword("HAVING")) {
      fail(IssueCategory::unsupported_construct, "HAVING is not supported");
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        reject_positional("ORDER BY");
        OrderItem item;
        item.expr = parse_expr();
        if (accept_keyword("DESC")) {
          item.direction = SortDirection::desc;
        } else {
          accept_keyword("ASC");
        }
        if (peek().is_keyword("NULLS")) {
          fail(IssueCategory::unsupported_construct, "NULLS FIRST/LAST is not supported");
        }
        q.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      const Token& t = peek();
      long long v = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (t.type != TokenType::number || ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
        fail(IssueCategory::syntax, "LIMIT expects a non-negative integer");
      }
      advance();
      q.limit = v;
    }
    if (peek().is_keyword("OFFSET")) fail(IssueCategory::unsupported_construct, "OFFSET is not supported");
    if (peek().is_keyword("UNION") || peek().is_keyword("INTERSECT") || peek().is_keyword("EXCEPT")) {
      fail(IssueCategory::unsupported_construct, "set operations (UNION/INTERSECT/EXCEPT) are not allowed");
    }
    if (accept_symbol(";")) {
      if (peek().type != TokenType::end) {
        fail(IssueCategory::multiple_statements, "only a single statement is allowed");
      }
    }
    if (peek().type != TokenType::end) fail(IssueCategory::syntax, "unexpected '" + peek().text + "'");
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool accept_keyword(std::string_view kw) {
    if (!peek().is_keyword(kw)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek().is_symbol(s)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail(IssueCategory::syntax, "expected " + std::string(kw) + describe_found());
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail(IssueCategory::syntax, "expected '" + std::string(s) + "'" + describe_found());
  }
  std::string describe_found() const {
    if (peek().type == TokenType::end) return " but reached end of query";
    return " but found '" + peek().text + "'";
  }

  [[noreturn]] void fail(IssueCategory cat, std::string msg) const {
    throw ParseError(peek().offset, cat, std::move(msg));
  }

  void reject_positional(std::string_view clause) {
    const Token& next = peek(1);
    const bool alone = next.type == TokenType::end || next.is_symbol(",") || next.is_symbol(";") ||
                       next.is_keyword("ASC") || next.is_keyword("DESC") || next.is_keyword("LIMIT") ||
                       next.is_keyword("ORDER") || next.is_keyword("HAVING") || next.is_keyword("NULLS");
    if (peek().type == TokenType::number && alone) {
      fail(IssueCategory::unsupported_construct,
           "positional references in " + std::string(clause) + " are not supported; repeat the expression or use its alias");
    }
  }

  std::string parse_identifier(std::string_view what) {
    const Token& t = peek();
    if (t.type == TokenType::quoted_identifier || (t.type == TokenType::identifier && !reserved(t))) {
      advance();
      return t.text;
    }
    if (t.is_keyword("SELECT")) fail(IssueCategory::subquery, "subqueries are not allowed");
    fail(IssueCategory::syntax, "expected " + std::string(what) + describe_found());
  }

  SelectItem parse_select_item() {
    SelectItem item;
    item.expr = parse_expr();
    if (accept_keyword("AS")) {
      item.alias = parse_identifier("alias");
    } else if (peek().type == TokenType::quoted_identifier ||
               (peek().type == TokenType::identifier && !reserved(peek()))) {
      item.alias = advance().text;
    }
    return item;
  }

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (peek().is_keyword("OR")) {
      const std::size_t off = advance().offset;
      lhs = Expr::binary(BinaryOp::logical_or, std::move(lhs), parse_and(), off);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_comparison();
    while (peek().is_keyword("AND")) {
      const std::size_t off = advance().offset;
      lhs = Expr::binary(BinaryOp::logical_and, std::move(lhs), parse_comparison(), off);
    }
    return lhs;
  }

  Expr parse_comparison() {
    if (peek().is_keyword("NOT")) {
      fail(IssueCategory::unsupported_construct, "NOT is not supported; use IS NOT NULL or a comparison");
    }
    if (peek().is_keyword("EXISTS")) fail(IssueCategory::subquery, "EXISTS subqueries are not allowed");
    Expr lhs = parse_additive();

    const Token& t = peek();
    if (t.is_keyword("IS")) {
      advance();
      const bool negated = accept_keyword("NOT");
      if (!accept_keyword("NULL")) {
        fail(IssueCategory::unsupported_construct, "only IS NULL / IS NOT NULL are supported");
      }
      return Expr::is_null_test(std::move(lhs), negated, t.offset);
    }
    if ((t.is_keyword("IN") || (t.is_keyword("NOT") && peek(1).is_keyword("IN"))) &&
        peek(t.is_keyword("IN") ? 1 : 2).is_symbol("(") && peek(t.is_keyword("IN") ? 2 : 3).is_keyword("SELECT")) {
      fail(IssueCategory::subquery, "subqueries are not allowed");
    }
    if (t.is_keyword("IN") || t.is_keyword("LIKE") || t.is_keyword("ILIKE") ||
        t.is_keyword("BETWEEN") || t.is_keyword("NOT")) {
      fail(IssueCategory::unsupported_construct, t.upper + " is not supported");
    }
    static const std::pair<std::string_view, BinaryOp> kOps[] = {
        {"=", BinaryOp::eq}, {"<>", BinaryOp::ne}, {"!=", BinaryOp::ne}, {"<=", BinaryOp::le},
        {">=", BinaryOp::ge}, {"<", BinaryOp::lt}, {">", BinaryOp::gt}};
    for (const auto& [sym, op] : kOps) {
      if (t.is_symbol(sym)) {
        advance();
        Expr rhs = parse_additive();
        for (const auto& [sym2, op2] : kOps) {
          if (peek().is_symbol(sym2)) fail(IssueCategory::syntax, "comparison operators cannot be chained");
        }
        return Expr::binary(op, std::move(lhs), std::move(rhs), t.offset);
      }
    }
    return lhs;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (peek().is_symbol("+") || peek().is_symbol("-")) {
      const Token& t = advance();
      const BinaryOp op = t.text == "+" ? BinaryOp::add : BinaryOp::sub;
      lhs = Expr::binary(op, std::move(lhs), parse_multiplicative(), t.offset);
    }
    if (peek().is_symbol("||")) fail(IssueCategory::unsupported_construct, "string concatenation is not supported");
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    while (peek().is_symbol("*") || peek().is_symbol("/")) {
      const Token& t = advance();
      const BinaryOp op = t.text == "*" ? BinaryOp::mul : BinaryOp::div;
      lhs = Expr::binary(op, std::move(lhs), parse_unary(), t.offset);
    }
    if (peek().is_symbol("%")) fail(IssueCategory::unsupported_construct, "modulo is not supported");
    return lhs;
  }

  Expr parse_unary() {
    if (peek().is_symbol("-") && peek(1).type == TokenType::number) {
      const std::size_t off = advance().offset;
      const Token& num = advance();
      return parse_postfix(Expr::number_lit("-" + num.text, off));
    }
    if (peek().is_symbol("-") || peek().is_symbol("+")) {
      fail(IssueCategory::unsupported_construct, "unary operators are only supported on numeric literals");
    }
    return parse_postfix(parse_primary());
  }

  Expr parse_postfix(Expr e) {
    if (peek().is_symbol("->") || peek().is_symbol("->>")) {
      const Token& op = advance();
      const Token& key = peek();
      if (key.type == TokenType::number) {
        fail(IssueCategory::jsonb_access, "JSONB array element access is not supported; use a top-level key");
      }
      if (key.type != TokenType::string) {
        fail(IssueCategory::syntax, "JSONB access expects a quoted key" + describe_found());
      }
      advance();
      if (e.kind == ExprKind::json_access) {
        throw ParseError(op.offset, IssueCategory::nested_jsonb,
                         "nested JSONB access is not allowed; only top-level keys");
      }
      e = Expr::json(std::move(e), op.text == "->" ? JsonOp::arrow : JsonOp::arrow_text, key.text,
                     op.offset);
      if (peek().is_symbol("->") || peek().is_symbol("->>") || peek().is_symbol("#>") ||
          peek().is_symbol("#>>")) {
        fail(IssueCategory::nested_jsonb, "nested JSONB access is not allowed; only top-level keys");
      }
      if (peek().is_symbol("::")) {
        fail(IssueCategory::syntax,
             "'::' binds to the key literal; parenthesize the access, e.g. (col->>'key')::FLOAT");
      }
    }
    if (peek().is_symbol("#>") || peek().is_symbol("#>>")) {
      fail(IssueCategory::nested_jsonb, "path operators (#>, #>>) are not allowed; only top-level keys");
    }
    if (peek().is_symbol("@>") || peek().is_symbol("<@") || peek().is_symbol("?")) {
      fail(IssueCategory::unsupported_construct, "JSONB containment/existence operators are not supported");
    }
    if (peek().is_symbol("::")) {
      const std::size_t off = advance().offset;
      e = Expr::cast(std::move(e), parse_cast_type(), off);
      if (peek().is_symbol("::")) fail(IssueCategory::unsupported_construct, "chained casts are not supported");
      if (peek().is_symbol("->") || peek().is_symbol("->>")) {
        fail(IssueCategory::jsonb_access, "JSONB access on a cast value is not supported");
      }
    }
    if (peek().is_symbol("[")) fail(IssueCategory::unsupported_construct, "subscripts are not supported");
    return e;
  }

  CastType parse_cast_type() {
    const Token& t = peek();
    if (t.type != TokenType::identifier) fail(IssueCategory::syntax, "expected a type name after '::'");
    advance();
    if (t.upper == "FLOAT" || t.upper == "FLOAT8") return CastType::float_type;
    if (t.upper == "DOUBLE" && peek().is_keyword("PRECISION")) {
      advance();
      return CastType::float_type;
    }
    if (t.upper == "NUMERIC" || t.upper == "DECIMAL") {
      if (peek().is_symbol("(")) fail(IssueCategory::unsupported_construct, "NUMERIC precision modifiers are not supported");
      return CastType::numeric_type;
    }
    throw ParseError(t.offset, IssueCategory::unsupported_construct,
                     "cast to " + t.text + " is not supported; only ::FLOAT and ::NUMERIC");
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::number:
        advance();
        return Expr::number_lit(t.text, t.offset);
      case TokenType::string:
        advance();
        return Expr::string_lit(t.text, t.offset);
      case TokenType::quoted_identifier:
        advance();
        return Expr::column(t.text, t.offset);
      case TokenType::symbol:
        if (t.is_symbol("(")) {
          advance();
          if (peek().is_keyword("SELECT") || peek().is_keyword("WITH")) {
            fail(IssueCategory::subquery, "subqueries are not allowed");
          }
          Expr inner = parse_expr();
          expect_symbol(")");
          return inner;
        }
        if (t.is_symbol("*")) {
          fail(IssueCategory::unsupported_construct, "'*' is only allowed as COUNT(*)");
        }
        fail(IssueCategory::syntax, "unexpected '" + t.text + "'");
      case TokenType::end:
        fail(IssueCategory::syntax, "unexpected end of query");
      case TokenType::identifier:
        break;
    }

    if (t.is_keyword("CASE")) fail(IssueCategory::unsupported_construct, "CASE expressions are not supported");
    if (t.is_keyword("SELECT")) fail(IssueCategory::subquery, "subqueries are not allowed");
    if (t.is_keyword("NULL") || t.is_keyword("TRUE") || t.is_keyword("FALSE")) {
      fail(IssueCategory::unsupported_construct, t.upper + " literals are not supported");
    }
    if (peek(1).is_symbol("(")) return parse_call();
    if (reserved(t)) fail(IssueCategory::syntax, "unexpected keyword " + t.upper);
    advance();
    if (peek().is_symbol(".")) {
      fail(IssueCategory::unsupported_construct, "qualified column references are not supported");
    }
    return Expr::column(t.text, t.offset);
  }

  Expr parse_call() {
    const Token& name = advance();
    const std::size_t off = name.offset;
    for (auto w : kWindowFunctions) {
      if (name.upper == w) {
        throw ParseError(off, IssueCategory::window_function,
                         "window functions (" + name.upper + ") are not allowed");
      }
    }
    expect_symbol("(");

    Expr call;
    if (name.upper == "EXTRACT") {
      call = parse_extract(off);
    } else if (name.upper == "TO_CHAR") {
      std::vector<Expr> args;
      args.push_back(parse_expr());
      expect_symbol(",");
      args.push_back(parse_expr());
      expect_symbol(")");
      call = Expr::call(Function::to_char, std::move(args), off);
    } else if (name.upper == "COALESCE") {
      std::vector<Expr> args;
      do {
        args.push_back(parse_expr());
      } while (accept_symbol(","));
      expect_symbol(")");
      if (args.size() < 2) throw ParseError(off, IssueCategory::syntax, "COALESCE needs at least two arguments");
      call = Expr::call(Function::coalesce, std::move(args), off);
    } else if (name.upper == "AVG" || name.upper == "COUNT" || name.upper == "SUM" ||
               name.upper == "MIN" || name.upper == "MAX") {
      const Function fn = name.upper == "AVG"     ? Function::avg
                          : name.upper == "COUNT" ? Function::count
                          : name.upper == "SUM"   ? Function::sum
                          : name.upper == "MIN"   ? Function::min
                                                  : Function::max;
      if (peek().is_keyword("DISTINCT")) {
        fail(IssueCategory::unsupported_construct, "DISTINCT inside aggregates is not supported");
      }
      std::vector<Expr> args;
      if (fn == Function::count && peek().is_symbol("*")) {
        args.push_back(Expr::star(advance().offset));
      } else {
        args.push_back(parse_expr());
      }
      if (peek().is_symbol(",")) fail(IssueCategory::syntax, name.upper + " takes exactly one argument");
      expect_symbol(")");
      call = Expr::call(fn, std::move(args), off);
    } else {
      throw ParseError(off, IssueCategory::unsupported_function,
                       "function " + name.text +
                           " is not supported (allowed: TO_CHAR, EXTRACT, COALESCE, AVG, COUNT, SUM, MIN, MAX)");
    }

    if (peek().is_keyword("OVER")) fail(IssueCategory::window_function, "window functions (OVER) are not allowed");
    if (peek().is_keyword("FILTER")) fail(IssueCategory::unsupported_construct, "aggregate FILTER is not supported");
    return call;
  }

  Expr parse_extract(std::size_t off) {
    if (!peek().is_keyword("EPOCH")) {
      fail(IssueCategory::unsupported_construct,
           "only EXTRACT(EPOCH FROM (timestamp2 - timestamp1)) is supported");
    }
    advance();
    expect_keyword("FROM");
    const std::size_t arg_off = peek().offset;
    Expr arg = parse_expr();
    expect_symbol(")");
    if (arg.kind != ExprKind::binary || arg.op != BinaryOp::sub) {
      throw ParseError(arg_off, IssueCategory::unsupported_construct,
                       "EXTRACT(EPOCH FROM ...) requires a timestamp difference (timestamp2 - timestamp1)");
    }
    std::vector<Expr> args = std::move(arg.args);
    return Expr::call(Function::extract_epoch, std::move(args), off);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse(std::string_view sql) { return Parser(sql).parse_query(); }

}  // namespace ctra::sql

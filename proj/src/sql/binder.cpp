#include "ctra/sql/binder.hpp"

#include "ctra/core/decimal.hpp"
#include "ctra/core/timestamp.hpp"
#include "ctra/sql/render.hpp"

#include <algorithm>
#include <set>

namespace ctra::sql {

std::string_view to_string(SqlType t) {
  switch (t) {
    case SqlType::boolean: return "boolean";
    case SqlType::number: return "numeric";
    case SqlType::text: return "text";
    case SqlType::timestamp: return "timestamp with time zone";
    case SqlType::interval: return "interval";
    case SqlType::json: return "jsonb";
    case SqlType::error: return "<error>";
  }
  return "?";
}

SqlType BoundQuery::type_of(const Expr& e) const {
  auto it = types.find(&e);
  return it == types.end() ? SqlType::error : it->second;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::string> nearest_column(std::string_view name, const data::TableSchema& schema,
                                          std::size_t max_distance) {
  std::optional<std::string> best;
  std::size_t best_d = max_distance + 1;
  for (const auto& c : schema.columns()) {
    const std::size_t d = edit_distance(name, c.name);
    if (d < best_d) {
      best_d = d;
      best = c.name;
    }
  }
  return best;
}

namespace {

const char* const kSupportedFormats[] = {"YYYY-MM-DD", "YYYY-\"W\"WW"};

class Binder {
 public:
  Binder(const QueryAst& q, const data::TableSchema& schema) : q_(q), schema_(schema) {}

  BoundQuery run() {
    if (q_.from_table != schema_.table_name()) {
      add(IssueCategory::unknown_table, "relation '" + q_.from_table + "' does not exist",
          "Query the '" + schema_.table_name() + "' table");
    }

    for (const auto& item : q_.select_items) {
      out_.select_types.push_back(infer(item.expr, Scope::select));
    }
    if (q_.where_clause) {
      const SqlType t = infer(*q_.where_clause, Scope::where);
      if (t != SqlType::boolean && t != SqlType::error) {
        add(IssueCategory::type_mismatch,
            "argument of WHERE must be boolean, not " + std::string(to_string(t)), "");
      }
    }
    resolve_group_by();
    resolve_order_by();

    out_.aggregated = !q_.group_by.empty();
    for (const auto& item : q_.select_items) out_.aggregated |= contains_aggregate(item.expr);
    for (const auto& k : out_.order_keys) {
      if (k.expr) out_.aggregated |= contains_aggregate(*k.expr);
    }
    if (out_.aggregated) check_grouping();
    return std::move(out_);
  }

 private:
  enum class Scope { select, where, group_by, order_by, aggregate_arg };

  void add(IssueCategory c, std::string error, std::string suggestion) {
    for (const auto& f : out_.findings) {
      if (f.error == error) return;
    }
    out_.findings.push_back(Finding{c, std::move(error), std::move(suggestion)});
  }

  SqlType set(const Expr& e, SqlType t) {
    out_.types[&e] = t;
    return t;
  }

  static bool is_string_literal(const Expr& e) { return e.kind == ExprKind::string_literal; }

  /// Re-types a string literal as `target` after checking its text converts.
  bool coerce_literal(const Expr& e, SqlType target) {
    if (!is_string_literal(e)) return false;
    if (target == SqlType::timestamp) {
      if (!Timestamp::try_parse(e.name)) {
        add(IssueCategory::type_mismatch,
            "invalid input syntax for type timestamp with time zone: \"" + e.name + "\"", "");
      }
      set(e, SqlType::timestamp);
      return true;
    }
    if (target == SqlType::number) {
      if (!Decimal::parse(e.name)) {
        add(IssueCategory::type_mismatch, "invalid input syntax for type numeric: \"" + e.name + "\"", "");
      }
      set(e, SqlType::number);
      return true;
    }
    return target == SqlType::text;
  }

  SqlType infer(const Expr& e, Scope scope) {
    switch (e.kind) {
      case ExprKind::column: return set(e, bind_column(e, scope));
      case ExprKind::string_literal: return set(e, SqlType::text);
      case ExprKind::number_literal:
        if (!Decimal::parse(e.name)) add(IssueCategory::syntax, "invalid numeric literal " + e.name, "");
        return set(e, SqlType::number);
      case ExprKind::star:
        add(IssueCategory::syntax, "'*' is only allowed as COUNT(*)", "");
        return set(e, SqlType::error);
      case ExprKind::function_call: return set(e, infer_call(e, scope));
      case ExprKind::binary: return set(e, infer_binary(e, scope));
      case ExprKind::is_null:
        infer(e.args[0], scope);
        return set(e, SqlType::boolean);
      case ExprKind::json_access: {
        const Expr& base = e.args[0];
        const SqlType bt = infer(base, scope);
        if (bt != SqlType::json && bt != SqlType::error) {
          const std::string what = base.kind == ExprKind::column ? "column '" + base.name + "'"
                                                                 : "expression";
          add(IssueCategory::jsonb_access,
              std::string("operator ") + (e.json_op == JsonOp::arrow ? "->" : "->>") +
                  " requires a JSONB value, but " + what + " is " + std::string(to_string(bt)),
              "Apply ->/->> only to JSONB columns such as execution_records or logs");
          return set(e, SqlType::error);
        }
        return set(e, e.json_op == JsonOp::arrow ? SqlType::json : SqlType::text);
      }
      case ExprKind::cast: {
        const SqlType t = infer(e.args[0], scope);
        if (t == SqlType::timestamp || t == SqlType::boolean || t == SqlType::interval) {
          add(IssueCategory::type_mismatch,
              "cannot cast type " + std::string(to_string(t)) + " to " +
                  (e.cast_type == CastType::float_type ? "double precision" : "numeric"),
              "");
          return set(e, SqlType::error);
        }
        return set(e, t == SqlType::error ? SqlType::error : SqlType::number);
      }
    }
    return SqlType::error;
  }

  SqlType bind_column(const Expr& e, Scope scope) {
    if (auto idx = schema_.index_of(e.name)) {
      out_.columns[&e] = *idx;
      switch (schema_.columns()[*idx].data_type) {
        case data::DataType::varchar: return SqlType::text;
        case data::DataType::timestamp_tz: return SqlType::timestamp;
        case data::DataType::jsonb: return SqlType::json;
      }
    }
    std::string suggestion;
    if (auto near = nearest_column(e.name, schema_)) {
      suggestion = "Use valid column '" + *near + "' instead of '" + e.name + "'";
    } else if (e.name.find("time") != std::string::npos) {
      suggestion =
          "'" + e.name + "' is not a stored column; derive durations with EXTRACT(EPOCH FROM "
          "(completed_timestamp - started_timestamp)) and dates with TO_CHAR(started_timestamp, "
          "'YYYY-MM-DD')";
    } else if (scope == Scope::where && is_alias(e.name)) {
      suggestion = "Output aliases cannot be used in WHERE; repeat the expression instead";
    } else {
      suggestion = "Use only columns defined in the " + schema_.table_name() + " schema";
    }
    add(IssueCategory::unknown_column, "column '" + e.name + "' does not exist", std::move(suggestion));
    return SqlType::error;
  }

  bool is_alias(const std::string& name) const {
    for (const auto& item : q_.select_items) {
      if (item.alias && *item.alias == name) return true;
    }
    return false;
  }

  SqlType infer_call(const Expr& e, Scope scope) {
    const bool agg = is_aggregate(e.fn);
    if (agg) {
      if (scope == Scope::where) {
        add(IssueCategory::aggregate_misuse, "aggregate functions are not allowed in WHERE",
            "Move the aggregate condition out of WHERE");
      } else if (scope == Scope::group_by) {
        add(IssueCategory::aggregate_misuse, "aggregate functions are not allowed in GROUP BY",
            "Group by the underlying column instead of the aggregate");
      } else if (scope == Scope::aggregate_arg) {
        add(IssueCategory::aggregate_misuse, "aggregate function calls cannot be nested", "");
      }
    }
    const Scope arg_scope = agg ? Scope::aggregate_arg : scope;

    switch (e.fn) {
      case Function::count:
        if (e.args[0].kind != ExprKind::star) infer(e.args[0], arg_scope);
        return SqlType::number;
      case Function::avg:
      case Function::sum: {
        const SqlType t = infer(e.args[0], arg_scope);
        if (coerce_literal(e.args[0], SqlType::number) || t == SqlType::number) return SqlType::number;
        if (t != SqlType::error) {
          add(IssueCategory::type_mismatch,
              "function " + std::string(function_name(e.fn)) + "(" + std::string(to_string(t)) +
                  ") does not exist",
              e.args[0].kind == ExprKind::json_access
                  ? "Cast the JSONB value, e.g. COALESCE(" + render_expr(e.args[0]) + ", '0')::FLOAT"
                  : "");
        }
        return SqlType::error;
      }
      case Function::min:
      case Function::max: {
        const SqlType t = infer(e.args[0], arg_scope);
        if (t == SqlType::number || t == SqlType::text || t == SqlType::timestamp || t == SqlType::error) {
          return t;
        }
        add(IssueCategory::type_mismatch,
            "function " + std::string(function_name(e.fn)) + "(" + std::string(to_string(t)) +
                ") does not exist",
            "");
        return SqlType::error;
      }
      case Function::to_char: {
        const SqlType t = infer(e.args[0], scope);
        if (!coerce_literal(e.args[0], SqlType::timestamp) && t != SqlType::timestamp &&
            t != SqlType::error) {
          add(IssueCategory::type_mismatch,
              "TO_CHAR expects a timestamp argument, got " + std::string(to_string(t)), "");
        }
        const Expr& fmt = e.args[1];
        infer(fmt, scope);
        const bool known = is_string_literal(fmt) &&
                           std::find(std::begin(kSupportedFormats), std::end(kSupportedFormats),
                                     fmt.name) != std::end(kSupportedFormats);
        if (!known) {
          add(IssueCategory::unsupported_format,
              "unsupported TO_CHAR format " + render_expr(fmt),
              "Use TO_CHAR(<timestamp>, 'YYYY-MM-DD') for daily or 'YYYY-\"W\"WW' for weekly grouping");
        }
        return SqlType::text;
      }
      case Function::extract_epoch: {
        const SqlType a = infer(e.args[0], scope);
        const SqlType b = infer(e.args[1], scope);
        bool ok = true;
        for (std::size_t i = 0; i < 2; ++i) {
          const SqlType t = i == 0 ? a : b;
          if (coerce_literal(e.args[i], SqlType::timestamp) || t == SqlType::timestamp) continue;
          if (t != SqlType::error) {
            add(IssueCategory::type_mismatch,
                "EXTRACT(EPOCH FROM (a - b)) needs two timestamps, got " + std::string(to_string(t)),
                "Subtract two timestamp columns, e.g. (completed_timestamp - started_timestamp)");
          }
          ok = false;
        }
        return ok ? SqlType::number : SqlType::error;
      }
      case Function::coalesce: {
        std::vector<SqlType> ts;
        for (const auto& a : e.args) ts.push_back(infer(a, scope));
        SqlType target = SqlType::error;
        bool all_literal = true;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (is_string_literal(e.args[i])) continue;
          all_literal = false;
          if (ts[i] != SqlType::error) {
            target = ts[i];
            break;
          }
        }
        if (all_literal) target = SqlType::text;
        if (target == SqlType::error) return SqlType::error;
        if (target == SqlType::interval) return SqlType::error;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (ts[i] == SqlType::error || ts[i] == target) continue;
          if (coerce_literal(e.args[i], target)) continue;
          add(IssueCategory::type_mismatch,
              "COALESCE types " + std::string(to_string(target)) + " and " +
                  std::string(to_string(ts[i])) + " cannot be matched",
              target == SqlType::text && ts[i] == SqlType::number
                  ? "Use a text default such as '0' and cast the result with ::FLOAT"
                  : "");
          return SqlType::error;
        }
        return target;
      }
    }
    return SqlType::error;
  }

  SqlType infer_binary(const Expr& e, Scope scope) {
    const Expr& l = e.args[0];
    const Expr& r = e.args[1];
    SqlType lt = infer(l, scope);
    SqlType rt = infer(r, scope);
    if (lt == SqlType::error || rt == SqlType::error) return SqlType::error;

    const std::string op(binary_op_text(e.op));
    auto mismatch = [&](std::string suggestion = {}) {
      add(IssueCategory::type_mismatch,
          "operator does not exist: " + std::string(to_string(lt)) + " " + op + " " +
              std::string(to_string(rt)),
          std::move(suggestion));
      return SqlType::error;
    };
    // A string literal adopts the type of the other operand.
    auto unify = [&]() {
      if (lt != rt) {
        if (is_string_literal(l) && coerce_literal(l, rt)) lt = rt;
        else if (is_string_literal(r) && coerce_literal(r, lt)) rt = lt;
      }
    };

    switch (e.op) {
      case BinaryOp::logical_and:
      case BinaryOp::logical_or:
        if (lt != SqlType::boolean || rt != SqlType::boolean) {
          add(IssueCategory::type_mismatch,
              "argument of " + op + " must be boolean", "");
          return SqlType::error;
        }
        return SqlType::boolean;
      case BinaryOp::sub:
        unify();
        if (lt == SqlType::timestamp && rt == SqlType::timestamp) {
          add(IssueCategory::type_mismatch,
              "timestamp differences are only supported as EXTRACT(EPOCH FROM (timestamp2 - timestamp1))",
              "Wrap the difference: EXTRACT(EPOCH FROM (" + render_expr(l) + " - " + render_expr(r) + "))");
          return SqlType::error;
        }
        [[fallthrough]];
      case BinaryOp::add:
      case BinaryOp::mul:
      case BinaryOp::div:
        unify();
        if (lt == SqlType::number && rt == SqlType::number) return SqlType::number;
        return mismatch(lt == SqlType::text || rt == SqlType::text
                            ? "Cast text values with ::FLOAT before arithmetic"
                            : "");
      default:
        unify();
        if (lt != rt) return mismatch();
        if (lt == SqlType::json || lt == SqlType::interval) return mismatch("Compare ->> text values instead of JSONB");
        return SqlType::boolean;
    }
  }

  void resolve_group_by() {
    for (const auto& g : q_.group_by) {
      const Expr* key = &g;
      if (g.kind == ExprKind::column && !schema_.find(g.name)) {
        for (const auto& item : q_.select_items) {
          if (item.alias && *item.alias == g.name) {
            key = &item.expr;
            break;
          }
        }
      }
      if (key == &g) {
        const SqlType t = infer(g, Scope::group_by);
        if (t == SqlType::interval) add(IssueCategory::type_mismatch, "cannot group by an interval", "");
      } else if (contains_aggregate(*key)) {
        add(IssueCategory::aggregate_misuse,
            "aggregate functions are not allowed in GROUP BY (via alias '" + g.name + "')", "");
      }
      out_.group_keys.push_back(key);
    }
  }

  void resolve_order_by() {
    for (const auto& o : q_.order_by) {
      BoundQuery::OrderKey key;
      key.direction = o.direction;
      if (o.expr.kind == ExprKind::column) {
        for (std::size_t i = 0; i < q_.select_items.size(); ++i) {
          const auto& item = q_.select_items[i];
          if (item.alias && *item.alias == o.expr.name) {
            key.select_index = i;
            break;
          }
        }
      }
      SqlType t;
      if (key.select_index) {
        t = out_.select_types[*key.select_index];
      } else {
        key.expr = &o.expr;
        t = infer(o.expr, Scope::order_by);
      }
      if (t == SqlType::json) {
        add(IssueCategory::type_mismatch, "cannot ORDER BY a JSONB value",
            "Order by a ->> text value or an aggregate instead");
      }
      out_.order_keys.push_back(key);
    }
  }

  bool matches_group_key(const Expr& e) const {
    for (const Expr* k : out_.group_keys) {
      if (*k == e) return true;
    }
    return false;
  }

  /// Column references not covered by a GROUP BY key or an aggregate.
  void ungrouped_columns(const Expr& e, std::vector<const Expr*>& out) const {
    if (matches_group_key(e)) return;
    if (e.kind == ExprKind::function_call && is_aggregate(e.fn)) return;
    if (e.kind == ExprKind::column) {
      out.push_back(&e);
      return;
    }
    for (const auto& a : e.args) ungrouped_columns(a, out);
  }

  void report_ungrouped(const Expr& top) {
    std::vector<const Expr*> cols;
    ungrouped_columns(top, cols);
    if (cols.empty()) return;
    const std::string fix = contains_aggregate(top) ? render_expr(*cols.front()) : render_expr(top);
    for (const Expr* c : cols) {
      if (!schema_.find(c->name)) continue;  // already reported as unknown
      add(IssueCategory::missing_group_by,
          "column '" + c->name + "' must appear in the GROUP BY clause or be used in an aggregate function",
          "Add GROUP BY " + fix);
    }
  }

  void check_grouping() {
    for (const auto& item : q_.select_items) report_ungrouped(item.expr);
    for (const auto& k : out_.order_keys) {
      if (k.expr) report_ungrouped(*k.expr);
    }
  }

  const QueryAst& q_;
  const data::TableSchema& schema_;
  BoundQuery out_;
};

}  // namespace

BoundQuery bind(const QueryAst& query, const data::TableSchema& schema) {
  return Binder(query, schema).run();
}

}  // namespace ctra::sql

#include "ctra/engine/evaluate.hpp"

#include "ctra/core/decimal.hpp"
#include "ctra/core/timestamp.hpp"
#include "ctra/sql/binder.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <variant>

namespace ctra::engine {

namespace {

using data::JobRecord;
using data::JsonValue;
using sql::BinaryOp;
using sql::Expr;
using sql::ExprKind;
using sql::Function;
using sql::SqlType;

/// NULL, boolean, number, text, timestamp, or a JSON value borrowed from a row.
using Value = std::variant<std::monostate, bool, Decimal, std::string, Timestamp, const JsonValue*>;

bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

[[noreturn]] void fail(std::string msg) { throw ExecutionError(ErrorPhase::evaluate, std::move(msg)); }

int compare_values(const Value& a, const Value& b) {
  if (auto x = std::get_if<Decimal>(&a)) {
    const Decimal& y = std::get<Decimal>(b);
    return *x < y ? -1 : y < *x ? 1 : 0;
  }
  if (auto x = std::get_if<std::string>(&a)) {
    const int c = x->compare(std::get<std::string>(b));
    return c < 0 ? -1 : c > 0 ? 1 : 0;
  }
  if (auto x = std::get_if<Timestamp>(&a)) {
    const Timestamp& y = std::get<Timestamp>(b);
    return *x < y ? -1 : y < *x ? 1 : 0;
  }
  if (auto x = std::get_if<bool>(&a)) {
    const bool y = std::get<bool>(b);
    return *x == y ? 0 : (*x ? 1 : -1);
  }
  if (auto x = std::get_if<const JsonValue*>(&a)) {
    const JsonValue* y = std::get<const JsonValue*>(b);
    return **x == *y ? 0 : (**x < *y ? -1 : 1);
  }
  return 0;
}

/// Stable textual identity of a value for hashing group keys.
std::string key_text(const Value& v) {
  switch (v.index()) {
    case 0: return "N";
    case 1: return std::get<bool>(v) ? "Bt" : "Bf";
    case 2: return "D" + std::get<Decimal>(v).to_string(30);
    case 3: return "S" + std::get<std::string>(v);
    case 4: return "T" + std::to_string(std::get<Timestamp>(v).micros_since_epoch);
    case 5: return "J" + std::get<const JsonValue*>(v)->dump();
  }
  return "?";
}

std::string to_char(const Timestamp& ts, const std::string& format) {
  const CivilDate d = utc_date(ts);
  char buf[32];
  if (format == "YYYY-MM-DD") {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  } else {
    const std::int64_t doy = days_from_civil(d.year, d.month, d.day) - days_from_civil(d.year, 1, 1) + 1;
    std::snprintf(buf, sizeof buf, "%04d-W%02lld", d.year, static_cast<long long>((doy - 1) / 7 + 1));
  }
  return buf;
}

class Evaluator {
 public:
  Evaluator(const sql::QueryAst& q, const sql::BoundQuery& bound, std::span<const JobRecord> rows)
      : q_(q), b_(bound), rows_(rows) {}

  data::ResultSet run() {
    std::vector<std::size_t> kept;
    kept.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!q_.where_clause) {
        kept.push_back(i);
        continue;
      }
      const Value v = eval_row(*q_.where_clause, rows_[i]);
      if (auto flag = std::get_if<bool>(&v); flag && *flag) kept.push_back(i);
    }

    // Each output row carries its select values plus extra ORDER BY key values.
    struct OutRow {
      std::vector<Value> select;
      std::vector<Value> order;
    };
    std::vector<OutRow> out;

    if (b_.aggregated) {
      std::vector<std::vector<std::size_t>> groups;
      if (b_.group_keys.empty()) {
        groups.push_back(kept);
      } else {
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t r : kept) {
          std::string key;
          for (const Expr* k : b_.group_keys) key += key_text(eval_row(*k, rows_[r])) + '\x1f';
          auto [it, inserted] = index.try_emplace(std::move(key), groups.size());
          if (inserted) groups.emplace_back();
          groups[it->second].push_back(r);
        }
      }
      for (const auto& g : groups) {
        OutRow row;
        for (const auto& item : q_.select_items) row.select.push_back(eval_group(item.expr, g));
        for (const auto& k : b_.order_keys) {
          row.order.push_back(k.select_index ? row.select[*k.select_index] : eval_group(*k.expr, g));
        }
        out.push_back(std::move(row));
      }
    } else {
      for (std::size_t r : kept) {
        OutRow row;
        for (const auto& item : q_.select_items) row.select.push_back(eval_row(item.expr, rows_[r]));
        for (const auto& k : b_.order_keys) {
          row.order.push_back(k.select_index ? row.select[*k.select_index] : eval_row(*k.expr, rows_[r]));
        }
        out.push_back(std::move(row));
      }
    }

    if (!b_.order_keys.empty()) {
      std::stable_sort(out.begin(), out.end(), [&](const OutRow& x, const OutRow& y) {
        for (std::size_t i = 0; i < b_.order_keys.size(); ++i) {
          const bool desc = b_.order_keys[i].direction == sql::SortDirection::desc;
          const Value& a = x.order[i];
          const Value& c = y.order[i];
          // NULLS LAST ascending, NULLS FIRST descending.
          if (is_null(a) || is_null(c)) {
            if (is_null(a) && is_null(c)) continue;
            return desc ? is_null(a) : is_null(c);
          }
          const int cmp = compare_values(a, c);
          if (cmp != 0) return desc ? cmp > 0 : cmp < 0;
        }
        return false;
      });
    }
    if (q_.limit && out.size() > static_cast<std::size_t>(*q_.limit)) {
      out.resize(static_cast<std::size_t>(*q_.limit));
    }

    data::ResultSet rs;
    for (std::size_t i = 0; i < q_.select_items.size(); ++i) {
      data::ResultColumn col;
      col.name = sql::output_name(q_.select_items[i]);
      col.kind = b_.select_types[i] == SqlType::number ? data::ColumnKind::number : data::ColumnKind::text;
      col.nullable = false;
      rs.columns.push_back(std::move(col));
    }
    for (auto& row : out) {
      data::ResultRow cells;
      for (std::size_t i = 0; i < row.select.size(); ++i) {
        cells.push_back(to_cell(row.select[i]));
        if (data::is_null(cells.back())) rs.columns[i].nullable = true;
      }
      rs.rows.push_back(std::move(cells));
    }
    return rs;
  }

 private:
  static data::ResultCell to_cell(const Value& v) {
    switch (v.index()) {
      case 1: return std::string(std::get<bool>(v) ? "true" : "false");
      case 2: return std::get<Decimal>(v);
      case 3: return std::get<std::string>(v);
      case 4: return std::get<Timestamp>(v).to_rfc3339();
      case 5: return std::get<const JsonValue*>(v)->dump();
      default: return std::monostate{};
    }
  }

  bool is_group_key(const Expr& e) const {
    for (const Expr* k : b_.group_keys) {
      if (*k == e) return true;
    }
    return false;
  }

  Value eval_group(const Expr& e, const std::vector<std::size_t>& group) {
    if (e.kind == ExprKind::function_call && sql::is_aggregate(e.fn)) return aggregate(e, group);
    if (group.empty()) {
      // Only reachable without GROUP BY: constants and aggregates.
      if (e.kind == ExprKind::column) return std::monostate{};
    } else if (e.kind == ExprKind::column || is_group_key(e)) {
      return eval_row(e, rows_[group.front()]);
    }
    return eval_node(e, [&](const Expr& child) { return eval_group(child, group); });
  }

  Value aggregate(const Expr& e, const std::vector<std::size_t>& group) {
    const Expr& arg = e.args[0];
    if (e.fn == Function::count) {
      std::int64_t n = 0;
      if (arg.kind == ExprKind::star) {
        n = static_cast<std::int64_t>(group.size());
      } else {
        for (std::size_t r : group) n += is_null(eval_row(arg, rows_[r])) ? 0 : 1;
      }
      return Decimal(n);
    }
    Value acc;
    Decimal sum;
    std::int64_t n = 0;
    for (std::size_t r : group) {
      Value v = eval_row(arg, rows_[r]);
      if (is_null(v)) continue;
      ++n;
      switch (e.fn) {
        case Function::sum:
        case Function::avg: sum += std::get<Decimal>(v); break;
        case Function::min:
          if (is_null(acc) || compare_values(v, acc) < 0) acc = std::move(v);
          break;
        case Function::max:
          if (is_null(acc) || compare_values(v, acc) > 0) acc = std::move(v);
          break;
        default: break;
      }
    }
    if (n == 0) return std::monostate{};
    if (e.fn == Function::sum) return sum;
    if (e.fn == Function::avg) return sum / Decimal(n);
    return acc;
  }

  Value eval_row(const Expr& e, const JobRecord& row) {
    if (e.kind == ExprKind::column) {
      const data::CellRef c = data::cell(row, b_.columns.at(&e));
      if (auto s = std::get_if<const std::string*>(&c)) return **s;
      if (auto t = std::get_if<const Timestamp*>(&c)) return **t;
      if (auto j = std::get_if<const JsonValue*>(&c)) return *j;
      return std::monostate{};
    }
    return eval_node(e, [&](const Expr& child) { return eval_row(child, row); });
  }

  /// Evaluates a non-column node given a way to evaluate its children.
  template <typename Child>
  Value eval_node(const Expr& e, Child&& child) {
    switch (e.kind) {
      case ExprKind::string_literal: {
        const SqlType t = b_.type_of(e);
        if (t == SqlType::timestamp) return Timestamp::parse(e.name);
        if (t == SqlType::number) return *Decimal::parse(e.name);
        return e.name;
      }
      case ExprKind::number_literal: return *Decimal::parse(e.name);
      case ExprKind::is_null: {
        const bool null = is_null(child(e.args[0]));
        return e.negated ? !null : null;
      }
      case ExprKind::json_access: {
        const Value base = child(e.args[0]);
        if (is_null(base)) return std::monostate{};
        const JsonValue* j = std::get<const JsonValue*>(base);
        if (!j->is_object()) return std::monostate{};
        auto it = j->find(e.name);
        if (it == j->end() || it->is_null()) return std::monostate{};
        if (e.json_op == sql::JsonOp::arrow) return &*it;
        if (it->is_string()) return it->get<std::string>();
        return it->dump();
      }
      case ExprKind::cast: return cast(e, child);
      case ExprKind::binary: return binary(e, child);
      case ExprKind::function_call: return call(e, child);
      default: fail("unsupported expression");
    }
  }

  template <typename Child>
  Value cast(const Expr& e, Child&& child) {
    const Expr& operand = e.args[0];
    const Value v = child(operand);
    const char* type_name = e.cast_type == sql::CastType::float_type ? "double precision" : "numeric";
    if (is_null(v)) {
      if (operand.kind == ExprKind::json_access) {
        const Value base = child(operand.args[0]);
        if (!is_null(base)) {
          const std::string column =
              operand.args[0].kind == ExprKind::column ? operand.args[0].name : "JSONB value";
          fail("JSONB key '" + operand.name + "' is missing in " + column +
               " for at least one row; wrap the access in COALESCE(" + column + "->>'" + operand.name +
               "', '0') before casting");
        }
      }
      return std::monostate{};
    }
    if (auto d = std::get_if<Decimal>(&v)) return *d;
    if (auto s = std::get_if<std::string>(&v)) {
      if (auto d = Decimal::parse(*s)) return *d;
      fail(std::string("invalid input syntax for type ") + type_name + ": \"" + *s + "\"");
    }
    if (auto j = std::get_if<const JsonValue*>(&v)) {
      if ((*j)->is_number()) return *Decimal::parse((*j)->dump());
      fail(std::string("cannot cast jsonb ") + (*j)->type_name() + " to type " + type_name);
    }
    fail(std::string("cannot cast value to ") + type_name);
  }

  template <typename Child>
  Value binary(const Expr& e, Child&& child) {
    if (e.op == BinaryOp::logical_and || e.op == BinaryOp::logical_or) {
      const Value l = child(e.args[0]);
      const Value r = child(e.args[1]);
      const bool is_and = e.op == BinaryOp::logical_and;
      auto truth = [](const Value& v) -> int { return is_null(v) ? -1 : std::get<bool>(v) ? 1 : 0; };
      const int a = truth(l), b = truth(r);
      if (is_and) {
        if (a == 0 || b == 0) return false;
        if (a == 1 && b == 1) return true;
      } else {
        if (a == 1 || b == 1) return true;
        if (a == 0 && b == 0) return false;
      }
      return std::monostate{};
    }
    const Value l = child(e.args[0]);
    const Value r = child(e.args[1]);
    if (is_null(l) || is_null(r)) return std::monostate{};
    switch (e.op) {
      case BinaryOp::add: return std::get<Decimal>(l) + std::get<Decimal>(r);
      case BinaryOp::sub: return std::get<Decimal>(l) - std::get<Decimal>(r);
      case BinaryOp::mul: return std::get<Decimal>(l) * std::get<Decimal>(r);
      case BinaryOp::div: {
        const Decimal& d = std::get<Decimal>(r);
        if (d.is_zero()) fail("division by zero");
        return std::get<Decimal>(l) / d;
      }
      default: break;
    }
    const int c = compare_values(l, r);
    switch (e.op) {
      case BinaryOp::eq: return c == 0;
      case BinaryOp::ne: return c != 0;
      case BinaryOp::lt: return c < 0;
      case BinaryOp::le: return c <= 0;
      case BinaryOp::gt: return c > 0;
      case BinaryOp::ge: return c >= 0;
      default: fail("unsupported operator");
    }
  }

  template <typename Child>
  Value call(const Expr& e, Child&& child) {
    switch (e.fn) {
      case Function::coalesce:
        for (const auto& a : e.args) {
          Value v = child(a);
          if (!is_null(v)) return v;
        }
        return std::monostate{};
      case Function::to_char: {
        const Value v = child(e.args[0]);
        if (is_null(v)) return std::monostate{};
        return to_char(std::get<Timestamp>(v), e.args[1].name);
      }
      case Function::extract_epoch: {
        const Value a = child(e.args[0]);
        const Value b = child(e.args[1]);
        if (is_null(a) || is_null(b)) return std::monostate{};
        return Decimal::from_micros(std::get<Timestamp>(a).micros_since_epoch -
                                    std::get<Timestamp>(b).micros_since_epoch);
      }
      default: fail("aggregate function used outside an aggregate context");
    }
  }

  const sql::QueryAst& q_;
  const sql::BoundQuery& b_;
  std::span<const JobRecord> rows_;
};

}  // namespace

data::ResultSet evaluate(const sql::QueryAst& query, std::span<const data::JobRecord> rows,
                         const data::TableSchema& schema) {
  const sql::BoundQuery bound = sql::bind(query, schema);
  if (!bound.ok()) {
    std::string msg;
    for (const auto& f : bound.findings) {
      if (!msg.empty()) msg += "; ";
      msg += f.error;
    }
    throw ExecutionError(ErrorPhase::bind, msg);
  }
  return Evaluator(query, bound, rows).run();
}

}  // namespace ctra::engine

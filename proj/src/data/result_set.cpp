#include "ctra/data/result_set.hpp"

#include <algorithm>

namespace ctra::data {

bool is_null(const ResultCell& c) { return std::holds_alternative<std::monostate>(c); }

std::string cell_text(const ResultCell& c, int max_fraction) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto d = std::get_if<Decimal>(&c)) return d->to_string(max_fraction);
  return "NULL";
}

int compare_cells(const ResultCell& a, const ResultCell& b) {
  if (a.index() != b.index()) {
    // monostate(0) < Decimal < string
    auto rank = [](const ResultCell& c) {
      return c.index() == 0 ? 0 : c.index() == 2 ? 1 : 2;
    };
    return rank(a) < rank(b) ? -1 : 1;
  }
  if (auto s = std::get_if<std::string>(&a)) {
    const int r = s->compare(std::get<std::string>(b));
    return r < 0 ? -1 : r > 0 ? 1 : 0;
  }
  if (auto d = std::get_if<Decimal>(&a)) {
    const Decimal& e = std::get<Decimal>(b);
    return *d < e ? -1 : e < *d ? 1 : 0;
  }
  return 0;
}

ResultSet canonical_order(ResultSet rs) {
  std::stable_sort(rs.rows.begin(), rs.rows.end(), [](const ResultRow& x, const ResultRow& y) {
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      const int c = compare_cells(x[i], y[i]);
      if (c != 0) return c < 0;
    }
    return x.size() < y.size();
  });
  return rs;
}

std::string format_table(const ResultSet& rs, std::size_t max_rows) {
  const std::size_t shown = std::min(rs.rows.size(), max_rows);
  std::vector<std::size_t> width(rs.columns.size());
  for (std::size_t c = 0; c < rs.columns.size(); ++c) width[c] = rs.columns[c].name.size();
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t c = 0; c < rs.columns.size(); ++c) {
      width[c] = std::max(width[c], cell_text(rs.rows[r][c]).size());
    }
  }

  auto pad = [](std::string s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };

  std::string out;
  for (std::size_t c = 0; c < rs.columns.size(); ++c) {
    if (c) out += " | ";
    out += pad(rs.columns[c].name, width[c], false);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += '\n';
  for (std::size_t c = 0; c < rs.columns.size(); ++c) {
    if (c) out += "-+-";
    out += std::string(width[c], '-');
  }
  out += '\n';
  for (std::size_t r = 0; r < shown; ++r) {
    std::string line;
    for (std::size_t c = 0; c < rs.columns.size(); ++c) {
      if (c) line += " | ";
      line += pad(cell_text(rs.rows[r][c]), width[c], rs.columns[c].kind == ColumnKind::number);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  if (rs.rows.size() > shown) {
    out += "... (" + std::to_string(rs.rows.size() - shown) + " more rows)\n";
  }
  if (rs.rows.empty()) out += "(0 rows)\n";
  return out;
}

}  // namespace ctra::data

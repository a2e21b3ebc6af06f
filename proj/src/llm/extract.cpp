#include "ctra/llm/extract.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <optional>

namespace ctra::llm {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// End (exclusive) of the bracket region opening at `open`, honoring JSON strings.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  const char o = s[open];
  const char c = o == '[' ? ']' : '}';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char ch = s[i];
    if (in_string) {
      if (ch == '\\') {
        ++i;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    if (ch == '"') {
      in_string = true;
    } else if (ch == '[' || ch == '{') {
      ++depth;
    } else if (ch == ']' || ch == '}') {
      --depth;
      if (depth == 0) {
        if (ch != c) return std::nullopt;
        return i + 1;
      }
    }
  }
  return std::nullopt;
}

/// Calls `accept` on every parseable region opening with `open` until it returns true.
template <typename Accept>
bool scan(std::string_view s, char open, Accept&& accept) {
  for (std::size_t p = s.find(open); p != std::string_view::npos; p = s.find(open, p + 1)) {
    auto end = balanced_end(s, p);
    if (!end) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(s.substr(p, *end - p));
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (accept(j)) return true;
  }
  return false;
}

bool is_string_list(const nlohmann::json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j) {
    if (!e.is_string()) return false;
  }
  return true;
}

bool starts_with_select(std::string_view line) {
  const std::string u = upper(trim(line).substr(0, 7));
  return u.rfind("SELECT", 0) == 0 && (u.size() == 6 || !(std::isalnum(static_cast<unsigned char>(u[6])) || u[6] == '_'));
}

bool is_fence(std::string_view line) { return trim(line).rfind("```", 0) == 0; }

/// A line after a blank that still reads as SQL rather than prose.
bool continues_sql(std::string_view line) {
  static const char* const heads[] = {"FROM",  "WHERE", "GROUP", "ORDER", "LIMIT", "AND",  "OR",   "HAVING",
                                      "JOIN",  "LEFT",  "INNER", "ON",    "AS",    "CASE", "WHEN", "ELSE",
                                      "END",   "UNION", "OFFSET"};
  const std::string_view t = trim(line);
  if (t.empty()) return false;
  if (t[0] == ',' || t[0] == ')' || t[0] == '(' || t[0] == '-' ) return true;
  const std::string u = upper(t);
  for (const char* h : heads) {
    const std::size_t n = std::char_traits<char>::length(h);
    if (u.rfind(h, 0) == 0 && (u.size() == n || !std::isalnum(static_cast<unsigned char>(u[n])))) return true;
  }
  return false;
}

std::vector<std::string_view> lines_of(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    auto e = s.find('\n', b);
    if (e == std::string_view::npos) e = s.size();
    out.push_back(s.substr(b, e - b));
    b = e + 1;
  }
  return out;
}

/// Index in `in` of the first semicolon outside a string literal, or npos.
std::size_t statement_end(std::string_view in) {
  bool quoted = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\'') quoted = !quoted;
    if (in[i] == ';' && !quoted) return i;
  }
  return std::string_view::npos;
}

std::optional<std::string> collect_select(const std::vector<std::string_view>& lines, std::size_t from,
                                          std::size_t to) {
  std::size_t start = to;
  for (std::size_t i = from; i < to; ++i) {
    if (starts_with_select(lines[i])) {
      start = i;
      break;
    }
  }
  if (start == to) return std::nullopt;
  std::string out;
  for (std::size_t i = start; i < to; ++i) {
    std::string_view line = lines[i];
    if (is_fence(line)) break;
    if (trim(line).empty()) {
      std::size_t k = i + 1;
      while (k < to && trim(lines[k]).empty()) ++k;
      if (k < to && continues_sql(lines[k]) && !is_fence(lines[k])) {
        i = k - 1;
        continue;
      }
      break;
    }
    const auto semi = statement_end(line);
    if (semi != std::string_view::npos) line = line.substr(0, semi);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.remove_suffix(1);
    if (!trim(line).empty()) {
      if (!out.empty()) out += '\n';
      out += line;
    }
    if (semi != std::string_view::npos) break;
  }
  const auto first = out.find_first_not_of(" \t");
  return out.substr(first);
}

}  // namespace

std::string strip_think(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = raw.find("<think>", pos);
    if (open == std::string_view::npos) break;
    const auto close = raw.find("</think>", open);
    if (close == std::string_view::npos) break;
    out += raw.substr(pos, open - pos);
    pos = close + 8;
  }
  out += raw.substr(pos);
  return out;
}

std::vector<std::string> extract_json_array(std::string_view raw) {
  const std::string text = strip_think(raw);
  std::vector<std::string> result;
  bool saw_array = false;
  const bool found = scan(text, '[', [&](const nlohmann::json& j) {
    if (!j.is_array()) return false;
    saw_array = true;
    if (!is_string_list(j)) return false;
    result = j.get<std::vector<std::string>>();
    return true;
  });
  if (found) return result;
  if (saw_array) throw ExtractError(ExtractError::Kind::wrong_shape, "JSON array does not contain only strings");
  throw ExtractError(ExtractError::Kind::no_json_found, "no JSON array found in response");
}

sql::ValidationReport extract_json_object(std::string_view raw) {
  const std::string text = strip_think(raw);
  sql::ValidationReport report;
  bool saw_object = false;
  const bool found = scan(text, '{', [&](const nlohmann::json& j) {
    if (!j.is_object()) return false;
    saw_object = true;
    if (!j.contains("is_valid") || !j["is_valid"].is_boolean()) return false;
    if (!j.contains("errors") || !is_string_list(j["errors"])) return false;
    if (!j.contains("suggestions") || !is_string_list(j["suggestions"])) return false;
    report.errors = j["errors"].get<std::vector<std::string>>();
    report.suggestions = j["suggestions"].get<std::vector<std::string>>();
    report.is_valid = j["is_valid"].get<bool>() && report.errors.empty();
    if (!j["is_valid"].get<bool>() && report.errors.empty()) {
      report.errors.push_back("query judged invalid without a stated reason");
    }
    return true;
  });
  if (found) return report;
  if (saw_object) {
    throw ExtractError(ExtractError::Kind::wrong_shape,
                       "JSON object lacks boolean is_valid and string lists errors, suggestions");
  }
  throw ExtractError(ExtractError::Kind::no_json_found, "no JSON object found in response");
}

nlohmann::json extract_any_json_object(std::string_view raw) {
  const std::string text = strip_think(raw);
  nlohmann::json out;
  if (scan(text, '{', [&](const nlohmann::json& j) {
        if (!j.is_object()) return false;
        out = j;
        return true;
      })) {
    return out;
  }
  throw ExtractError(ExtractError::Kind::no_json_found, "no JSON object found in response");
}

std::string extract_sql(std::string_view raw) {
  const std::string text = strip_think(raw);
  const auto lines = lines_of(text);
  // Fenced blocks first, then the whole text.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) continue;
    std::size_t j = i + 1;
    while (j < lines.size() && !is_fence(lines[j])) ++j;
    if (auto sql = collect_select(lines, i + 1, j)) return *sql;
    i = j;
  }
  if (auto sql = collect_select(lines, 0, lines.size())) return *sql;
  throw ExtractError(ExtractError::Kind::no_select_found, "no SELECT statement found in response");
}

}  // namespace ctra::llm

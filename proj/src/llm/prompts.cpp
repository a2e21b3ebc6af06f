#include "ctra/llm/prompts.hpp"

#include "prompt_assets.hpp"

#include <fstream>
#include <sstream>

namespace ctra::llm {

MissingPlaceholder::MissingPlaceholder(std::string role, std::string name)
    : std::runtime_error("missing placeholder '" + name + "' for role " + role),
      role_(std::move(role)),
      name_(std::move(name)) {}

namespace {

bool ident_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

/// nullopt: not a context field. Inner nullopt: field absent.
std::optional<std::optional<std::string>> lookup(std::string_view name, const PromptContext& ctx) {
  auto num = [](const std::optional<int>& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return std::to_string(*v);
  };
  if (name == "table_schema") return std::optional<std::string>(ctx.table_schema);
  if (name == "num_questions") return num(ctx.num_questions);
  if (name == "question") return ctx.question;
  if (name == "code") return ctx.code;
  if (name == "errors") return ctx.errors;
  if (name == "queries_results") return ctx.queries_results;
  if (name == "output_dir") return std::optional<std::string>(ctx.output_dir);
  if (name == "data") return ctx.data;
  if (name == "plot_filename") return ctx.plot_filename;
  if (name == "attempt") return num(ctx.attempt);
  if (name == "max_attempts") return num(ctx.max_attempts);
  if (name == "reflection") return ctx.reflection;
  return std::nullopt;
}

}  // namespace

std::string substitute(std::string_view tmpl, const PromptContext& ctx, std::string_view role_label) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && ident_char(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string_view name = tmpl.substr(i + 1, j - i - 1);
        if (auto field = lookup(name, ctx)) {
          if (!*field) throw MissingPlaceholder(std::string(role_label), std::string(name));
          out += **field;
          i = j + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

const PromptLibrary& PromptLibrary::embedded() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    for (const auto& [name, text] : detail::prompt_assets()) l.texts_.emplace(name, text);
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary l = embedded();
  for (auto& [name, text] : l.texts_) {
    std::ifstream in(dir / (name + ".txt"), std::ios::binary);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return l;
}

const std::string& PromptLibrary::text(std::string_view name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw std::out_of_range("unknown prompt asset: " + std::string(name));
  return it->second;
}

std::string_view PromptLibrary::asset_for(Role role) {
  switch (role) {
    case Role::question_creation: return "generate_questions";
    case Role::query_builder: return "generate_sql";
    case Role::code_check: return "code_check";
    case Role::reflect: return "reflect";
    case Role::report: return "report";
    case Role::chart: return "chart";
  }
  return "";
}

std::string PromptLibrary::render(Role role, const PromptContext& ctx) const {
  std::string tmpl = text(asset_for(role));
  if (role == Role::report && ctx.plot_extension != "png") {
    const std::string from = "plot_query_X.png";
    const std::string from1 = "plot_query_1.png";
    for (const auto& f : {from, from1}) {
      const std::string to = f.substr(0, f.size() - 3) + ctx.plot_extension;
      for (std::size_t p = tmpl.find(f); p != std::string::npos; p = tmpl.find(f, p + to.size())) {
        tmpl.replace(p, f.size(), to);
      }
    }
  }
  return substitute(tmpl, ctx, role_name(role));
}

std::string PromptLibrary::render_retry_feedback(const PromptContext& ctx) const {
  return substitute(text("retry_feedback"), ctx, "query_builder");
}

std::string PromptLibrary::render_chart_spec(const PromptContext& ctx) const {
  return render(Role::chart, ctx) + substitute(text("chart_spec"), ctx, "chart");
}

std::string render_prompt(Role role, const PromptContext& ctx) {
  return PromptLibrary::embedded().render(role, ctx);
}

}  // namespace ctra::llm

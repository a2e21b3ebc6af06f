#include "ctra/insights/chart.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

extern char** environ;

namespace ctra::insights {

std::string_view chart_kind_name(ChartKind kind) {
  switch (kind) {
    case ChartKind::bar: return "bar";
    case ChartKind::line: return "line";
    case ChartKind::dual_axis: return "dual_axis";
    case ChartKind::placeholder: return "placeholder";
  }
  return "?";
}

std::string_view image_extension(ImageFormat format) { return format == ImageFormat::png ? "png" : "svg"; }

ChartSpec placeholder_spec(std::string title, std::string filename) {
  ChartSpec s;
  s.kind = ChartKind::placeholder;
  s.title = std::move(title);
  s.filename = std::move(filename);
  s.message = std::string(kDataUnavailable);
  return s;
}

std::string title_from_question(const std::string& question) {
  std::string t = question;
  const auto open = t.rfind("(Suitable for");
  if (open != std::string::npos) t.erase(open);
  while (!t.empty() && (t.back() == ' ' || t.back() == '?' || t.back() == '.')) t.pop_back();
  if (t.size() > 90) t = t.substr(0, 87) + "...";
  return t.empty() ? "Query Results" : t;
}

namespace {

bool is_time_label(const std::string& s) {
  auto digits = [&](std::size_t from, std::size_t n) {
    for (std::size_t i = from; i < from + n; ++i) {
      if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
  };
  if (s.size() == 10) return digits(0, 4) && s[4] == '-' && digits(5, 2) && s[7] == '-' && digits(8, 2);
  if (s.size() == 8) return digits(0, 4) && s[4] == '-' && s[5] == 'W' && digits(6, 2);
  return false;
}

std::optional<Decimal> as_number(const data::ResultCell& c) {
  if (auto d = std::get_if<Decimal>(&c)) return *d;
  if (auto s = std::get_if<std::string>(&c)) return Decimal::parse(*s);
  return Decimal(0);
}

bool numeric_column(const data::ResultSet& rs, std::size_t col) {
  if (rs.columns[col].kind == data::ColumnKind::number) return true;
  bool any = false;
  for (const auto& row : rs.rows) {
    if (data::is_null(row[col])) continue;
    if (!as_number(row[col])) return false;
    any = true;
  }
  return any;
}

/// Sorts categories and every series by `order`.
void permute(ChartSpec& spec, const std::vector<std::size_t>& order) {
  std::vector<std::string> cats;
  for (std::size_t i : order) cats.push_back(spec.categories_or_dates[i]);
  spec.categories_or_dates = std::move(cats);
  for (auto& s : spec.series) {
    std::vector<Decimal> v;
    for (std::size_t i : order) v.push_back(s.values[i]);
    s.values = std::move(v);
  }
}

void apply_bar_rule(ChartSpec& spec) {
  std::vector<std::size_t> order(spec.categories_or_dates.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& v = spec.series.front().values;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[b] < v[a]; });
  if (order.size() > kMaxBars) order.resize(kMaxBars);
  permute(spec, order);
}

void apply_time_rule(ChartSpec& spec) {
  std::vector<std::size_t> order(spec.categories_or_dates.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& c = spec.categories_or_dates;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
  permute(spec, order);
}

}  // namespace

ChartSpec spec_from_result(const std::string& question, const data::ResultSet& result, const std::string& filename) {
  const std::string title = title_from_question(question);
  if (result.rows.empty() || result.columns.size() < 2) return placeholder_spec(title, filename);

  std::size_t first_value = 0;
  for (std::size_t c = 1; c < result.columns.size(); ++c) {
    if (numeric_column(result, c)) {
      first_value = c;
      break;
    }
  }
  if (first_value == 0) return placeholder_spec(title, filename);

  ChartSpec spec;
  spec.title = title;
  spec.filename = filename;
  for (std::size_t c = 0; c < first_value; ++c) {
    if (c) spec.x_label += " / ";
    spec.x_label += result.columns[c].name;
  }
  for (std::size_t c = first_value; c < result.columns.size() && spec.series.size() < 2; ++c) {
    if (!numeric_column(result, c)) continue;
    Series s;
    s.name = result.columns[c].name;
    for (const auto& row : result.rows) s.values.push_back(as_number(row[c]).value_or(Decimal(0)));
    spec.series.push_back(std::move(s));
  }
  spec.y_label = spec.series.front().name;
  bool time = first_value == 1;
  for (const auto& row : result.rows) {
    std::string label;
    for (std::size_t c = 0; c < first_value; ++c) {
      if (c) label += " / ";
      label += data::cell_text(row[c], 6);
    }
    time = time && is_time_label(label);
    spec.categories_or_dates.push_back(std::move(label));
  }
  if (time) {
    spec.kind = spec.series.size() == 2 ? ChartKind::dual_axis : ChartKind::line;
    apply_time_rule(spec);
  } else {
    spec.kind = ChartKind::bar;
    apply_bar_rule(spec);
  }
  return spec;
}

std::optional<ChartSpec> spec_from_json(const nlohmann::json& j, const std::string& filename) {
  try {
    ChartSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bar") {
      s.kind = ChartKind::bar;
    } else if (kind == "line") {
      s.kind = ChartKind::line;
    } else if (kind == "dual_axis") {
      s.kind = ChartKind::dual_axis;
    } else if (kind == "placeholder") {
      return placeholder_spec(j.value("title", std::string("Query Results")), filename);
    } else {
      return std::nullopt;
    }
    s.title = j.value("title", std::string());
    s.x_label = j.value("x_label", std::string());
    s.y_label = j.value("y_label", std::string());
    s.filename = filename;
    s.categories_or_dates = j.at("categories_or_dates").get<std::vector<std::string>>();
    for (const auto& sj : j.at("series")) {
      Series series;
      series.name = sj.value("name", std::string());
      for (const auto& v : sj.at("values")) {
        if (v.is_null()) {
          series.values.emplace_back(0);
        } else if (v.is_number()) {
          auto d = Decimal::parse(v.dump());
          if (!d) return std::nullopt;
          series.values.push_back(*d);
        } else {
          return std::nullopt;
        }
      }
      if (series.values.size() != s.categories_or_dates.size()) return std::nullopt;
      s.series.push_back(std::move(series));
    }
    if (s.series.empty() || s.series.size() > 2 || s.categories_or_dates.empty()) return std::nullopt;
    if (s.kind == ChartKind::dual_axis && s.series.size() != 2) return std::nullopt;
    if (s.kind == ChartKind::bar) apply_bar_rule(s);
    return s;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string tick_label(double v) {
  char buf[64];
  if (std::fabs(v) >= 1e6) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }
  return num(v);
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string shorten(const std::string& s, std::size_t n = 24) {
  return s.size() <= n ? s : s.substr(0, n - 3) + "...";
}

struct Scale {
  double lo = 0;
  double hi = 1;
  double step = 0.2;
};

Scale nice_scale(double lo, double hi) {
  if (hi <= lo) hi = lo + 1;
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1 : norm < 3 ? 2 : norm < 7 ? 5 : 10) * mag;
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

Scale scale_of(const std::vector<Decimal>& values) {
  double lo = 0, hi = 0;
  for (const auto& v : values) {
    lo = std::min(lo, v.to_double());
    hi = std::max(hi, v.to_double());
  }
  return nice_scale(lo, hi);
}

constexpr const char* kColors[] = {"#4c72b0", "#c44e52"};

class Svg {
 public:
  Svg(int w, int h) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(w) +
            "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
            "\" font-family=\"DejaVu Sans, Arial, sans-serif\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
            "\" fill=\"#ffffff\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& cls, const std::string& stroke) {
    out_ += "<line class=\"" + cls + "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
            "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor, int size,
            const std::string& extra = "") {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
            std::to_string(size) + "\"" + extra + ">" + esc(s) + "</text>\n";
  }
  void raw(const std::string& s) { out_ += s; }
  std::string finish() { return out_ + "</svg>\n"; }

 private:
  std::string out_;
};

constexpr double kW = 1000, kH = 600, kTop = 60, kBottom = 150, kLeft = 90;

void y_axis(Svg& svg, const Scale& s, double x, double plot_w, bool left, bool grid, const std::string& color,
            const std::string& label) {
  const double plot_h = kH - kTop - kBottom;
  svg.line(x, kTop, x, kTop + plot_h, "axis", "#333333");
  for (double t = s.lo; t <= s.hi + s.step / 2; t += s.step) {
    const double y = kTop + plot_h * (s.hi - t) / (s.hi - s.lo);
    if (grid) svg.line(kLeft, y, kLeft + plot_w, y, "grid", "#dddddd");
    svg.line(left ? x - 5 : x, y, left ? x : x + 5, y, "axis", "#333333");
    svg.text(left ? x - 8 : x + 8, y + 4, tick_label(std::fabs(t) < s.step * 1e-9 ? 0 : t), left ? "end" : "start", 11,
             " fill=\"" + color + "\"");
  }
  const double lx = left ? 22 : kW - 18;
  const double ly = kTop + plot_h / 2;
  svg.text(lx, ly, label, "middle", 13,
           " fill=\"" + color + "\" transform=\"rotate(-90 " + num(lx) + " " + num(ly) + ")\"");
}

std::string render_placeholder(const ChartSpec& spec) {
  Svg svg(800, 600);
  svg.text(400, 40, spec.title, "middle", 16);
  svg.text(400, 300, spec.message.empty() ? std::string(kDataUnavailable) : spec.message, "middle", 16,
           " class=\"placeholder\" dominant-baseline=\"middle\"");
  return svg.finish();
}

}  // namespace

std::string render_svg(const ChartSpec& spec) {
  if (spec.kind == ChartKind::placeholder || spec.series.empty() || spec.categories_or_dates.empty()) {
    return render_placeholder(spec);
  }
  const bool dual = spec.kind == ChartKind::dual_axis && spec.series.size() == 2;
  const double right = dual ? 90 : 40;
  const double plot_w = kW - kLeft - right;
  const double plot_h = kH - kTop - kBottom;
  const std::size_t n = spec.categories_or_dates.size();

  Svg svg(static_cast<int>(kW), static_cast<int>(kH));
  svg.text(kW / 2, 32, spec.title, "middle", 18, " class=\"title\"");

  std::vector<Scale> scales;
  if (dual) {
    scales = {scale_of(spec.series[0].values), scale_of(spec.series[1].values)};
  } else {
    std::vector<Decimal> all;
    for (const auto& s : spec.series) all.insert(all.end(), s.values.begin(), s.values.end());
    scales.assign(spec.series.size(), scale_of(all));
  }
  y_axis(svg, scales[0], kLeft, plot_w, true, true, dual ? kColors[0] : "#333333", spec.y_label);
  if (dual) y_axis(svg, scales[1], kLeft + plot_w, plot_w, false, false, kColors[1], spec.series[1].name);
  svg.line(kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h, "axis", "#333333");

  auto y_of = [&](const Scale& s, double v) { return kTop + plot_h * (s.hi - v) / (s.hi - s.lo); };
  const double band = plot_w / static_cast<double>(n);

  if (spec.kind == ChartKind::bar) {
    const double bw = band * 0.7 / static_cast<double>(spec.series.size());
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
      const Scale& s = scales[k];
      for (std::size_t i = 0; i < n; ++i) {
        const double v = spec.series[k].values[i].to_double();
        const double y0 = y_of(s, std::max(v, 0.0));
        const double y1 = y_of(s, std::min(v, 0.0));
        const double x = kLeft + band * static_cast<double>(i) + band * 0.15 + bw * static_cast<double>(k);
        svg.raw("<rect class=\"bar\" data-value=\"" + spec.series[k].values[i].to_string(6) + "\" x=\"" + num(x) +
                "\" y=\"" + num(y0) + "\" width=\"" + num(bw) + "\" height=\"" + num(y1 - y0) + "\" fill=\"" +
                kColors[k % 2] + "\"/>\n");
      }
    }
  } else {
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
      const Scale& s = scales[k];
      std::string points;
      std::string dots;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = kLeft + band * (static_cast<double>(i) + 0.5);
        const double y = y_of(s, spec.series[k].values[i].to_double());
        if (i) points += ' ';
        points += num(x) + "," + num(y);
        dots += "<circle class=\"point\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" +
                kColors[k % 2] + "\"/>\n";
      }
      svg.raw("<polyline class=\"series\" points=\"" + points + "\" fill=\"none\" stroke=\"" + kColors[k % 2] +
              "\" stroke-width=\"2\"/>\n" + dots);
    }
  }

  const std::size_t stride = n > 20 ? (n + 19) / 20 : 1;
  for (std::size_t i = 0; i < n; i += stride) {
    const double x = kLeft + band * (static_cast<double>(i) + 0.5);
    const double y = kTop + plot_h + 16;
    svg.text(x, y, shorten(spec.categories_or_dates[i]), "end", 11,
             " class=\"xtick\" transform=\"rotate(-45 " + num(x) + " " + num(y) + ")\"");
  }
  svg.text(kLeft + plot_w / 2, kH - 12, spec.x_label, "middle", 13);

  if (spec.series.size() > 1) {
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
      const double y = kTop + 4 + 18 * static_cast<double>(k);
      svg.raw("<rect class=\"legend\" x=\"" + num(kLeft + plot_w - 230) + "\" y=\"" + num(y) +
              "\" width=\"12\" height=\"12\" fill=\"" + kColors[k % 2] + "\"/>\n");
      svg.text(kLeft + plot_w - 212, y + 11, spec.series[k].name, "start", 12);
    }
  }
  return svg.finish();
}

void render_chart(const ChartSpec& spec, const std::filesystem::path& path, ImageFormat format) {
  const std::string svg = render_svg(spec);
  const std::filesystem::path svg_path =
      format == ImageFormat::svg ? path : std::filesystem::path(path.string() + ".tmp.svg");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  {
    std::ofstream out(svg_path, std::ios::binary | std::ios::trunc);
    if (!out) throw ChartIoError("cannot write " + svg_path.string());
    out << svg;
    if (!out) throw ChartIoError("write failed: " + svg_path.string());
  }
  if (format == ImageFormat::svg) return;

  const std::string out_arg = path.string();
  const std::string in_arg = svg_path.string();
  std::vector<char*> argv = {const_cast<char*>("rsvg-convert"), const_cast<char*>("-f"), const_cast<char*>("png"),
                             const_cast<char*>("-o"), const_cast<char*>(out_arg.c_str()),
                             const_cast<char*>(in_arg.c_str()), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, "rsvg-convert", nullptr, nullptr, argv.data(), environ);
  int status = 0;
  const bool ok = rc == 0 && waitpid(pid, &status, 0) == pid && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  std::error_code ec;
  std::filesystem::remove(svg_path, ec);
  if (!ok) throw ChartIoError("PNG conversion failed for " + out_arg + " (rsvg-convert unavailable or failed)");
}

}  // namespace ctra::insights

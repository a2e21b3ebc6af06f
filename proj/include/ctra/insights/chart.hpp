#pragma once

#include "ctra/core/decimal.hpp"
#include "ctra/data/result_set.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctra::insights {

enum class ChartKind { bar, line, dual_axis, placeholder };
enum class ImageFormat { svg, png };

std::string_view chart_kind_name(ChartKind kind);
std::string_view image_extension(ImageFormat format);

struct Series {
  std::string name;
  std::vector<Decimal> values;

  friend bool operator==(const Series&, const Series&) = default;
};

inline constexpr std::string_view kDataUnavailable = "Data Unavailable";
inline constexpr std::size_t kMaxBars = 10;

struct ChartSpec {
  ChartKind kind = ChartKind::placeholder;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories_or_dates;
  std::vector<Series> series;
  std::string filename;
  std::string message;  // placeholder text

  friend bool operator==(const ChartSpec&, const ChartSpec&) = default;
};

ChartSpec placeholder_spec(std::string title, std::string filename);

/// Rule-based chart choice for a query result.
ChartSpec spec_from_result(const std::string& question, const data::ResultSet& result, const std::string& filename);

/// Validates a model-proposed spec and applies the same rules (nulls to 0, top 10
/// bars descending, equal lengths). nullopt when unusable.
std::optional<ChartSpec> spec_from_json(const nlohmann::json& j, const std::string& filename);

/// Chart title from question text, without the "(Suitable for ...)" clause.
std::string title_from_question(const std::string& question);

/// Deterministic SVG document.
std::string render_svg(const ChartSpec& spec);

class ChartIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the chart; PNG goes through `rsvg-convert`. Throws ChartIoError.
void render_chart(const ChartSpec& spec, const std::filesystem::path& path, ImageFormat format = ImageFormat::svg);

}  // namespace ctra::insights

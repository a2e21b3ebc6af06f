#include "ctra/data/schema.hpp"

#include <set>
#include <stdexcept>

namespace ctra::data {

std::string_view to_string(DataType t) {
  switch (t) {
    case DataType::varchar: return "VARCHAR";
    case DataType::timestamp_tz: return "TIMESTAMP WITH TIME ZONE";
    case DataType::jsonb: return "JSONB";
  }
  return "?";
}

TableSchema::TableSchema(std::string table_name, std::vector<ColumnDef> columns)
    : table_name_(std::move(table_name)), columns_(std::move(columns)) {
  std::set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second) {
      throw std::invalid_argument("duplicate column '" + c.name + "' in table " + table_name_);
    }
  }
}

std::optional<std::size_t> TableSchema::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == column) return i;
  }
  return std::nullopt;
}

const ColumnDef* TableSchema::find(std::string_view column) const {
  auto i = index_of(column);
  return i ? &columns_[*i] : nullptr;
}

namespace {

std::string_view column_note(std::string_view name) {
  if (name == "id") return "primary key";
  if (name == "state") return "e.g. 'COMPLETED', 'IN_ERROR'";
  if (name == "execution_records")
    return "array of objects with 'event_type', 'name', 'started_timestamp', 'finished_timestamp'";
  if (name == "logs") return "array of objects with 'level', 'message', 'created_timestamp'";
  return {};
}

}  // namespace

std::string TableSchema::to_prompt_text() const {
  std::string out = "CREATE TABLE " + table_name_ + " (\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    out += "    " + c.name + " " + std::string(to_string(c.data_type));
    if (!c.nullable) out += " NOT NULL";
    if (i + 1 < columns_.size()) out += ",";
    if (auto note = column_note(c.name); !note.empty()) out += " -- " + std::string(note);
    out += "\n";
  }
  out += ");";
  return out;
}

const TableSchema& jobs_schema() {
  using T = DataType;
  static const TableSchema schema("jobs", {
      {"id", T::varchar, false},
      {"name", T::varchar, false},
      {"lab_id", T::varchar, false},
      {"workflow_id", T::varchar, false},
      {"state", T::varchar, false},
      {"created_timestamp", T::timestamp_tz, false},
      {"started_timestamp", T::timestamp_tz, true},
      {"completed_timestamp", T::timestamp_tz, true},
      {"root_action_id", T::varchar, true},
      {"lab_reference", T::varchar, true},
      {"associated_ids", T::jsonb, true},
      {"parameters", T::jsonb, true},
      {"outputs", T::jsonb, true},
      {"barcodes", T::jsonb, true},
      {"batched_job_ids", T::jsonb, true},
      {"children_job_ids", T::jsonb, true},
      {"execution_records", T::jsonb, true},
      {"logs", T::jsonb, true},
      {"files", T::jsonb, true},
      {"notes", T::jsonb, true},
      {"configuration_versions", T::jsonb, true},
  });
  return schema;
}

}  // namespace ctra::data

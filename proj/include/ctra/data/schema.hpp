#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctra::data {

enum class DataType { varchar, timestamp_tz, jsonb };

std::string_view to_string(DataType t);

struct ColumnDef {
  std::string name;
  DataType data_type = DataType::varchar;
  bool nullable = true;
};

class TableSchema {
 public:
  TableSchema(std::string table_name, std::vector<ColumnDef> columns);

  const std::string& table_name() const { return table_name_; }
  const std::vector<ColumnDef>& columns() const { return columns_; }

  std::optional<std::size_t> index_of(std::string_view column) const;
  const ColumnDef* find(std::string_view column) const;

  /// DDL-style rendering used as the `{table_schema}` prompt context.
  std::string to_prompt_text() const;

 private:
  std::string table_name_;
  std::vector<ColumnDef> columns_;
};

/// The 21-column `jobs` table.
const TableSchema& jobs_schema();

/// Column positions in `jobs_schema()`; JobRecord accessors rely on this order.
enum class JobColumn : std::size_t {
  id,
  name,
  lab_id,
  workflow_id,
  state,
  created_timestamp,
  started_timestamp,
  completed_timestamp,
  root_action_id,
  lab_reference,
  associated_ids,
  parameters,
  outputs,
  barcodes,
  batched_job_ids,
  children_job_ids,
  execution_records,
  logs,
  files,
  notes,
  configuration_versions,
};

constexpr std::size_t kJobColumnCount = 21;

}  // namespace ctra::data

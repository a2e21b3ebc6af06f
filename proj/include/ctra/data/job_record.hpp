#pragma once

#include "ctra/core/timestamp.hpp"
#include "ctra/data/schema.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>

namespace ctra::data {

using JsonValue = nlohmann::json;

/// One row of the `jobs` table. Optional members model SQL NULL.
struct JobRecord {
  std::string id;
  std::string name;
  std::string lab_id;
  std::string workflow_id;
  std::string state;
  Timestamp created_timestamp;
  std::optional<Timestamp> started_timestamp;
  std::optional<Timestamp> completed_timestamp;
  std::optional<std::string> root_action_id;
  std::optional<std::string> lab_reference;
  std::optional<JsonValue> associated_ids;
  std::optional<JsonValue> parameters;
  std::optional<JsonValue> outputs;
  std::optional<JsonValue> barcodes;
  std::optional<JsonValue> batched_job_ids;
  std::optional<JsonValue> children_job_ids;
  std::optional<JsonValue> execution_records;
  std::optional<JsonValue> logs;
  std::optional<JsonValue> files;
  std::optional<JsonValue> notes;
  std::optional<JsonValue> configuration_versions;
};

/// Borrowed view of one cell; monostate is NULL.
using CellRef =
    std::variant<std::monostate, const std::string*, const Timestamp*, const JsonValue*>;

CellRef cell(const JobRecord& record, JobColumn column);
inline CellRef cell(const JobRecord& record, std::size_t column) {
  return cell(record, static_cast<JobColumn>(column));
}

/// Field-for-field equality, including timestamp offsets.
bool identical(const JobRecord& a, const JobRecord& b);

/// Object with one key per column in schema order; NULL columns are omitted.
nlohmann::ordered_json to_json(const JobRecord& record);

class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::size_t row, std::string column, std::string reason);
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t row_;
  std::string column_;
  std::string reason_;
};

/// Inverse of to_json. `row` is only used for error reporting.
JobRecord job_from_json(const nlohmann::json& object, std::size_t row);

/// Checks the JobRecord invariants (timestamp ordering, logs/execution_records shape).
/// Returns the first violation message, or nullopt.
std::optional<std::string> check_invariants(const JobRecord& record);

}  // namespace ctra::data

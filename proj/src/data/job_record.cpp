#include "ctra/data/job_record.hpp"

namespace ctra::data {

CellRef cell(const JobRecord& r, JobColumn column) {
  auto opt_str = [](const std::optional<std::string>& v) -> CellRef {
    if (v) return &*v;
    return std::monostate{};
  };
  auto opt_ts = [](const std::optional<Timestamp>& v) -> CellRef {
    if (v) return &*v;
    return std::monostate{};
  };
  auto opt_json = [](const std::optional<JsonValue>& v) -> CellRef {
    if (v) return &*v;
    return std::monostate{};
  };
  switch (column) {
    case JobColumn::id: return &r.id;
    case JobColumn::name: return &r.name;
    case JobColumn::lab_id: return &r.lab_id;
    case JobColumn::workflow_id: return &r.workflow_id;
    case JobColumn::state: return &r.state;
    case JobColumn::created_timestamp: return &r.created_timestamp;
    case JobColumn::started_timestamp: return opt_ts(r.started_timestamp);
    case JobColumn::completed_timestamp: return opt_ts(r.completed_timestamp);
    case JobColumn::root_action_id: return opt_str(r.root_action_id);
    case JobColumn::lab_reference: return opt_str(r.lab_reference);
    case JobColumn::associated_ids: return opt_json(r.associated_ids);
    case JobColumn::parameters: return opt_json(r.parameters);
    case JobColumn::outputs: return opt_json(r.outputs);
    case JobColumn::barcodes: return opt_json(r.barcodes);
    case JobColumn::batched_job_ids: return opt_json(r.batched_job_ids);
    case JobColumn::children_job_ids: return opt_json(r.children_job_ids);
    case JobColumn::execution_records: return opt_json(r.execution_records);
    case JobColumn::logs: return opt_json(r.logs);
    case JobColumn::files: return opt_json(r.files);
    case JobColumn::notes: return opt_json(r.notes);
    case JobColumn::configuration_versions: return opt_json(r.configuration_versions);
  }
  return std::monostate{};
}

bool identical(const JobRecord& a, const JobRecord& b) {
  for (std::size_t i = 0; i < kJobColumnCount; ++i) {
    const CellRef x = cell(a, i);
    const CellRef y = cell(b, i);
    if (x.index() != y.index()) return false;
    switch (x.index()) {
      case 0: break;
      case 1:
        if (*std::get<1>(x) != *std::get<1>(y)) return false;
        break;
      case 2:
        if (!ctra::identical(*std::get<2>(x), *std::get<2>(y))) return false;
        break;
      case 3:
        if (*std::get<3>(x) != *std::get<3>(y)) return false;
        break;
    }
  }
  return true;
}

nlohmann::ordered_json to_json(const JobRecord& record) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  const auto& columns = jobs_schema().columns();
  for (std::size_t i = 0; i < kJobColumnCount; ++i) {
    const CellRef c = cell(record, i);
    const std::string& name = columns[i].name;
    if (auto s = std::get_if<const std::string*>(&c)) {
      out[name] = **s;
    } else if (auto t = std::get_if<const Timestamp*>(&c)) {
      out[name] = (*t)->to_rfc3339();
    } else if (auto j = std::get_if<const JsonValue*>(&c)) {
      out[name] = nlohmann::ordered_json::parse((*j)->dump());
    }
  }
  return out;
}

SchemaViolation::SchemaViolation(std::size_t row, std::string column, std::string reason)
    : std::runtime_error("schema violation at row " + std::to_string(row) + ", column " + column +
                         ": " + reason),
      row_(row),
      column_(std::move(column)),
      reason_(std::move(reason)) {}

JobRecord job_from_json(const nlohmann::json& object, std::size_t row) {
  if (!object.is_object()) throw SchemaViolation(row, "*", "row is not a JSON object");
  const auto& schema = jobs_schema();
  for (const auto& [key, _] : object.items()) {
    if (!schema.find(key)) throw SchemaViolation(row, key, "unknown column");
  }

  JobRecord r;
  for (std::size_t i = 0; i < kJobColumnCount; ++i) {
    const ColumnDef& def = schema.columns()[i];
    auto it = object.find(def.name);
    const bool is_null = it == object.end() || it->is_null();
    if (is_null) {
      if (!def.nullable) throw SchemaViolation(row, def.name, "missing value for NOT NULL column");
      continue;
    }
    const auto col = static_cast<JobColumn>(i);
    switch (def.data_type) {
      case DataType::varchar: {
        if (!it->is_string()) throw SchemaViolation(row, def.name, "expected string");
        std::string v = it->get<std::string>();
        switch (col) {
          case JobColumn::id: r.id = std::move(v); break;
          case JobColumn::name: r.name = std::move(v); break;
          case JobColumn::lab_id: r.lab_id = std::move(v); break;
          case JobColumn::workflow_id: r.workflow_id = std::move(v); break;
          case JobColumn::state: r.state = std::move(v); break;
          case JobColumn::root_action_id: r.root_action_id = std::move(v); break;
          case JobColumn::lab_reference: r.lab_reference = std::move(v); break;
          default: break;
        }
        break;
      }
      case DataType::timestamp_tz: {
        if (!it->is_string()) throw SchemaViolation(row, def.name, "expected timestamp string");
        auto ts = Timestamp::try_parse(it->get_ref<const std::string&>());
        if (!ts) throw SchemaViolation(row, def.name, "invalid timestamp");
        if (col == JobColumn::created_timestamp) r.created_timestamp = *ts;
        if (col == JobColumn::started_timestamp) r.started_timestamp = *ts;
        if (col == JobColumn::completed_timestamp) r.completed_timestamp = *ts;
        break;
      }
      case DataType::jsonb: {
        std::optional<JsonValue>* slot = nullptr;
        switch (col) {
          case JobColumn::associated_ids: slot = &r.associated_ids; break;
          case JobColumn::parameters: slot = &r.parameters; break;
          case JobColumn::outputs: slot = &r.outputs; break;
          case JobColumn::barcodes: slot = &r.barcodes; break;
          case JobColumn::batched_job_ids: slot = &r.batched_job_ids; break;
          case JobColumn::children_job_ids: slot = &r.children_job_ids; break;
          case JobColumn::execution_records: slot = &r.execution_records; break;
          case JobColumn::logs: slot = &r.logs; break;
          case JobColumn::files: slot = &r.files; break;
          case JobColumn::notes: slot = &r.notes; break;
          case JobColumn::configuration_versions: slot = &r.configuration_versions; break;
          default: break;
        }
        if (slot) *slot = *it;
        break;
      }
    }
  }
  return r;
}

namespace {

bool list_of_maps_with(const JsonValue& v, std::initializer_list<const char*> keys) {
  if (!v.is_array()) return false;
  for (const auto& e : v) {
    if (!e.is_object()) return false;
    for (const char* k : keys) {
      if (!e.contains(k)) return false;
    }
  }
  return true;
}

}  // namespace

std::optional<std::string> check_invariants(const JobRecord& r) {
  if (r.started_timestamp && *r.started_timestamp < r.created_timestamp) {
    return "started_timestamp precedes created_timestamp";
  }
  if (r.completed_timestamp && r.started_timestamp &&
      *r.completed_timestamp < *r.started_timestamp) {
    return "completed_timestamp precedes started_timestamp";
  }
  if (r.logs && !list_of_maps_with(*r.logs, {"level", "message", "created_timestamp"})) {
    return "logs must be a list of {level, message, created_timestamp}";
  }
  if (r.execution_records &&
      !list_of_maps_with(*r.execution_records,
                         {"event_type", "name", "started_timestamp", "finished_timestamp"})) {
    return "execution_records must be a list of {event_type, name, started_timestamp, "
           "finished_timestamp}";
  }
  return std::nullopt;
}

}  // namespace ctra::data

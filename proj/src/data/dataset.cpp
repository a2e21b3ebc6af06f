#include "ctra/data/dataset.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace ctra::data {

namespace {

void append_json_line(std::string& out, const JobRecord& r) {
  const auto& columns = jobs_schema().columns();
  out += '{';
  bool first = true;
  for (std::size_t i = 0; i < kJobColumnCount; ++i) {
    const CellRef c = cell(r, i);
    if (std::holds_alternative<std::monostate>(c)) continue;
    if (!first) out += ',';
    first = false;
    out += JsonValue(columns[i].name).dump();
    out += ':';
    if (auto s = std::get_if<const std::string*>(&c)) {
      out += JsonValue(**s).dump();
    } else if (auto t = std::get_if<const Timestamp*>(&c)) {
      out += '"' + (*t)->to_rfc3339() + '"';
    } else if (auto j = std::get_if<const JsonValue*>(&c)) {
      out += (*j)->dump();
    }
  }
  out += "}\n";
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && !s.empty()) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

struct CsvField {
  std::string text;
  bool quoted = false;
};

/// RFC 4180 record reader; returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<CsvField>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  CsvField field;
  bool in_quotes = false;
  while (true) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) throw DatasetIoError("unterminated quoted CSV field");
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.text += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field.text += ch;
      }
      continue;
    }
    if (ch == '"' && field.text.empty()) {
      in_quotes = true;
      field.quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field = CsvField{};
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.text += ch;
    }
  }
}

}  // namespace

std::vector<JobRecord> parse_jsonl(std::istream& in) {
  std::vector<JobRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaViolation(row, "*", std::string("malformed JSON: ") + e.what());
    }
    out.push_back(job_from_json(object, row));
    ++row;
  }
  return out;
}

std::vector<JobRecord> parse_csv(std::istream& in) {
  std::vector<CsvField> header;
  if (!read_csv_record(in, header)) return {};
  const auto& schema = jobs_schema();
  for (const auto& h : header) {
    if (!schema.find(h.text)) throw SchemaViolation(0, h.text, "unknown column in CSV header");
  }

  std::vector<JobRecord> out;
  std::vector<CsvField> fields;
  std::size_t row = 0;
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && fields[0].text.empty() && !fields[0].quoted) continue;
    if (fields.size() != header.size()) {
      throw SchemaViolation(row, "*",
                            "expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size()));
    }
    nlohmann::json object = nlohmann::json::object();
    for (std::size_t i = 0; i < header.size(); ++i) {
      const ColumnDef* def = schema.find(header[i].text);
      const CsvField& f = fields[i];
      if (f.text.empty() && !f.quoted) continue;  // NULL
      if (def->data_type == DataType::jsonb) {
        try {
          object[def->name] = nlohmann::json::parse(f.text);
        } catch (const nlohmann::json::parse_error&) {
          throw SchemaViolation(row, def->name, "malformed JSON in JSONB cell");
        }
      } else {
        object[def->name] = f.text;
      }
    }
    out.push_back(job_from_json(object, row));
    ++row;
  }
  return out;
}

std::vector<JobRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetIoError("cannot open dataset " + path.string());
  return format == DatasetFormat::jsonl ? parse_jsonl(in) : parse_csv(in);
}

std::string serialize_jsonl(const std::vector<JobRecord>& records) {
  std::string out;
  out.reserve(records.size() * 512);
  for (const auto& r : records) append_json_line(out, r);
  return out;
}

void write_jsonl(const std::vector<JobRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetIoError("cannot write dataset " + path.string());
  const std::string text = serialize_jsonl(records);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DatasetIoError("write failed for " + path.string());
}

std::string serialize_csv(const std::vector<JobRecord>& records) {
  const auto& columns = jobs_schema().columns();
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i].name;
  }
  out += '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < kJobColumnCount; ++i) {
      if (i) out += ',';
      const CellRef c = cell(r, i);
      if (auto s = std::get_if<const std::string*>(&c)) {
        out += (*s)->empty() ? "\"\"" : csv_escape(**s);
      } else if (auto t = std::get_if<const Timestamp*>(&c)) {
        out += (*t)->to_rfc3339();
      } else if (auto j = std::get_if<const JsonValue*>(&c)) {
        out += csv_escape((*j)->dump());
      }
    }
    out += '\n';
  }
  return out;
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::jsonl;
}

}  // namespace ctra::data

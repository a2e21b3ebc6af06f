#pragma once

#include "ctra/data/job_record.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctra::data {

enum class DatasetFormat { jsonl, csv };

class DatasetIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a dataset. Throws DatasetIoError when the file cannot be read and
/// SchemaViolation (0-based data-row index) for malformed rows.
std::vector<JobRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format);

std::vector<JobRecord> parse_jsonl(std::istream& in);
std::vector<JobRecord> parse_csv(std::istream& in);

/// One compact JSON object per line, columns in schema order, NULLs omitted.
std::string serialize_jsonl(const std::vector<JobRecord>& records);
void write_jsonl(const std::vector<JobRecord>& records, const std::filesystem::path& path);

std::string serialize_csv(const std::vector<JobRecord>& records);

DatasetFormat format_from_path(const std::filesystem::path& path);

}  // namespace ctra::data

#pragma once

#include "ctra/data/job_record.hpp"
#include "ctra/data/result_set.hpp"
#include "ctra/engine/evaluate.hpp"
#include "ctra/sql/ast.hpp"

#include <span>
#include <vector>

namespace ctra::data {

using engine::ExecutionError;

/// Runs a linted query over `data` through the in-process engine.
ResultSet execute(const sql::QueryAst& query, std::span<const JobRecord> data);

/// Where pipeline queries run.
class QueryBackend {
 public:
  virtual ~QueryBackend() = default;
  virtual ResultSet execute(const sql::QueryAst& query) const = 0;
  virtual const TableSchema& schema() const = 0;
};

class InMemoryBackend final : public QueryBackend {
 public:
  explicit InMemoryBackend(std::vector<JobRecord> rows) : rows_(std::move(rows)) {}

  ResultSet execute(const sql::QueryAst& query) const override { return data::execute(query, rows_); }
  const TableSchema& schema() const override { return jobs_schema(); }
  const std::vector<JobRecord>& rows() const { return rows_; }

 private:
  std::vector<JobRecord> rows_;
};

}  // namespace ctra::data

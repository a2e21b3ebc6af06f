#pragma once

#include "ctra/data/job_record.hpp"
#include "ctra/data/result_set.hpp"
#include "ctra/data/schema.hpp"
#include "ctra/sql/ast.hpp"

#include <span>
#include <stdexcept>
#include <string>

namespace ctra::engine {

enum class ErrorPhase { bind, evaluate };

/// Query failure whose message is suitable as Error Analyst feedback verbatim.
class ExecutionError : public std::runtime_error {
 public:
  ExecutionError(ErrorPhase phase, std::string message)
      : std::runtime_error(message), phase_(phase), message_(std::move(message)) {}

  ErrorPhase phase() const { return phase_; }
  const std::string& message() const { return message_; }

 private:
  ErrorPhase phase_;
  std::string message_;
};

/// Runs a query over in-memory rows with PostgreSQL-style semantics for the
/// supported subset. Rows are only read.
data::ResultSet evaluate(const sql::QueryAst& query, std::span<const data::JobRecord> rows,
                         const data::TableSchema& schema = data::jobs_schema());

}  // namespace ctra::engine

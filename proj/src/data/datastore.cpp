#include "ctra/data/datastore.hpp"

namespace ctra::data {

ResultSet execute(const sql::QueryAst& query, std::span<const JobRecord> data) {
  return engine::evaluate(query, data, jobs_schema());
}

}  // namespace ctra::data

#pragma once

#include "ctra/core/kv_config.hpp"
#include "ctra/core/timestamp.hpp"
#include "ctra/data/job_record.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctra::data {

class InvalidProfile : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StateProfile {
  std::string state;
  std::int64_t count = 0;
  double started_fraction = 1.0;
  std::int64_t mean_start_delay_micros = 0;  // creation-to-start mean over started jobs
  double delay_sigma = 1.0;                  // lognormal shape
};

struct GenerationProfile {
  Timestamp period_start = Timestamp::from_utc(2024, 3, 1);
  std::int64_t period_days = 31;
  std::int64_t lab_count = 4;
  std::int64_t workflow_count = 12;
  std::vector<StateProfile> states;
  std::int64_t hot_workflow_errors = 41250;
  std::int64_t other_workflow_errors_min = 12;
  std::int64_t other_workflow_errors_max = 320;
  double hot_error_share = 0.955;

  std::int64_t record_count() const;

  /// Same profile with state counts rescaled (largest remainder) to `n` records.
  GenerationProfile with_record_count(std::int64_t n) const;

  /// Throws InvalidProfile.
  void validate() const;

  /// Keys as in serialize(); absent keys keep their default value.
  static GenerationProfile from_config(const KeyValueConfig& config);
  KeyValueConfig to_config() const;
};

/// Calibrated one-month corpus: 5,031 jobs over six states.
GenerationProfile default_profile();

/// Pure function of (seed, profile). Records are ordered by created_timestamp.
std::vector<JobRecord> generate_synthetic(std::uint64_t seed, const GenerationProfile& profile);

/// Workflow id that receives the heavy error-log mass.
std::string hot_workflow_id(const GenerationProfile& profile);

}  // namespace ctra::data

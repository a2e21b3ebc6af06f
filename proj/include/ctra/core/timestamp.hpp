#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctra {

class TimestampError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An instant with the UTC offset it was written with (TIMESTAMP WITH TIME ZONE).
/// Equality and ordering compare instants only; the offset is presentation.
struct Timestamp {
  std::int64_t micros_since_epoch = 0;  // UTC
  std::int32_t offset_minutes = 0;

  /// Accepts `YYYY-MM-DD`, `YYYY-MM-DD[T ]HH:MM[:SS[.ffffff]]` with optional
  /// `Z` / `±HH[:MM]` offset. A missing offset means UTC.
  static Timestamp parse(std::string_view text);
  static std::optional<Timestamp> try_parse(std::string_view text) noexcept;

  static Timestamp from_utc(int year, int month, int day, int hour = 0, int minute = 0,
                            int second = 0, std::int64_t micros = 0);

  /// RFC 3339 in the stored offset; fraction printed only when non-zero.
  std::string to_rfc3339() const;

  friend bool operator==(const Timestamp& a, const Timestamp& b) noexcept {
    return a.micros_since_epoch == b.micros_since_epoch;
  }
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) noexcept {
    return a.micros_since_epoch <=> b.micros_since_epoch;
  }
};

/// Field-level equality (instant and offset), used for dataset round-trips.
inline bool identical(const Timestamp& a, const Timestamp& b) noexcept {
  return a.micros_since_epoch == b.micros_since_epoch && a.offset_minutes == b.offset_minutes;
}

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

std::int64_t days_from_civil(int year, unsigned month, unsigned day) noexcept;
CivilDate civil_from_days(std::int64_t days) noexcept;

/// UTC calendar date of an instant.
CivilDate utc_date(const Timestamp& ts) noexcept;

constexpr std::int64_t kMicrosPerSecond = 1'000'000;
constexpr std::int64_t kMicrosPerDay = 86'400LL * kMicrosPerSecond;

}  // namespace ctra

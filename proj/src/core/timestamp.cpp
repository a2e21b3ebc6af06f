#include "ctra/core/timestamp.hpp"

#include <cctype>
#include <cstdio>

namespace ctra {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(int year, unsigned month, unsigned day) noexcept {
  year -= month <= 2 ? 1 : 0;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const auto yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CivilDate{static_cast<int>(y + (m <= 2 ? 1 : 0)), m, d};
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  void advance() { ++pos_; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  int digits(std::size_t n) {
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected digit");
      v = v * 10 + (peek() - '0');
      ++pos_;
    }
    return v;
  }
  [[noreturn]] void fail(const char* what) const {
    throw TimestampError("invalid timestamp '" + std::string(s_) + "': " + what);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Timestamp Timestamp::from_utc(int year, int month, int day, int hour, int minute, int second,
                              std::int64_t micros) {
  const std::int64_t days =
      days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  Timestamp ts;
  ts.micros_since_epoch =
      days * kMicrosPerDay + ((hour * 60LL + minute) * 60LL + second) * kMicrosPerSecond + micros;
  return ts;
}

Timestamp Timestamp::parse(std::string_view text) {
  Cursor c(text);
  const int year = c.digits(4);
  if (!c.accept('-')) c.fail("expected '-'");
  const int month = c.digits(2);
  if (!c.accept('-')) c.fail("expected '-'");
  const int day = c.digits(2);
  if (month < 1 || month > 12) c.fail("month out of range");
  if (day < 1 || static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)))
    c.fail("day out of range");

  int hour = 0, minute = 0, second = 0;
  std::int64_t micros = 0;
  int offset = 0;
  if (!c.done()) {
    if (!(c.accept('T') || c.accept('t') || c.accept(' '))) c.fail("expected 'T'");
    hour = c.digits(2);
    if (!c.accept(':')) c.fail("expected ':'");
    minute = c.digits(2);
    if (c.accept(':')) {
      second = c.digits(2);
      if (c.accept('.')) {
        int n = 0;
        while (std::isdigit(static_cast<unsigned char>(c.peek()))) {
          if (n == 6) c.fail("more than 6 fractional digits");
          micros = micros * 10 + (c.peek() - '0');
          c.advance();
          ++n;
        }
        if (n == 0) c.fail("empty fraction");
        for (; n < 6; ++n) micros *= 10;
      }
    }
    if (hour > 23 || minute > 59 || second > 59) c.fail("time out of range");
    if (c.accept('Z') || c.accept('z')) {
      offset = 0;
    } else if (c.peek() == '+' || c.peek() == '-') {
      const int sign = c.peek() == '-' ? -1 : 1;
      c.advance();
      const int oh = c.digits(2);
      int om = 0;
      if (c.accept(':')) {
        om = c.digits(2);
      } else if (!c.done()) {
        om = c.digits(2);
      }
      if (oh > 23 || om > 59) c.fail("offset out of range");
      offset = sign * (oh * 60 + om);
    }
  }
  if (!c.done()) c.fail("trailing characters");

  Timestamp ts = from_utc(year, month, day, hour, minute, second, micros);
  ts.micros_since_epoch -= static_cast<std::int64_t>(offset) * 60 * kMicrosPerSecond;
  ts.offset_minutes = offset;
  return ts;
}

std::optional<Timestamp> Timestamp::try_parse(std::string_view text) noexcept {
  try {
    return parse(text);
  } catch (const TimestampError&) {
    return std::nullopt;
  }
}

std::string Timestamp::to_rfc3339() const {
  const std::int64_t local =
      micros_since_epoch + static_cast<std::int64_t>(offset_minutes) * 60 * kMicrosPerSecond;
  const std::int64_t days = floor_div(local, kMicrosPerDay);
  const std::int64_t in_day = local - days * kMicrosPerDay;
  const CivilDate date = civil_from_days(days);
  const std::int64_t secs = in_day / kMicrosPerSecond;
  const std::int64_t frac = in_day % kMicrosPerSecond;

  char buf[64];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", date.year,
                        date.month, date.day, static_cast<long long>(secs / 3600),
                        static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
  if (frac != 0) {
    n += std::snprintf(buf + n, sizeof buf - n, ".%06lld", static_cast<long long>(frac));
  }
  const int off = offset_minutes < 0 ? -offset_minutes : offset_minutes;
  std::snprintf(buf + n, sizeof buf - n, "%c%02d:%02d", offset_minutes < 0 ? '-' : '+', off / 60,
                off % 60);
  return buf;
}

CivilDate utc_date(const Timestamp& ts) noexcept {
  return civil_from_days(floor_div(ts.micros_since_epoch, kMicrosPerDay));
}

}  // namespace ctra

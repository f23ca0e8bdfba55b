#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace leadlag {

/// Calendar date without a time zone. Serialises as ISO-8601 (YYYY-MM-DD).
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  friend auto operator<=>(const Date&, const Date&) = default;

  bool valid() const;

  /// Days since 1970-01-01 (negative before the epoch).
  std::int64_t serial() const;

  /// 0 = Sunday .. 6 = Saturday.
  int weekday() const;

  /// The next Monday..Friday strictly after this date.
  Date next_weekday() const;

  std::string to_string() const;

  static Date from_serial(std::int64_t days);

  /// Parses strict YYYY-MM-DD; throws DataError otherwise.
  static Date parse(std::string_view iso);
};

}  // namespace leadlag

#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace ssaam {

/// Calendar day stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(int ordinal) : ordinal_(ordinal) {}

  static Date from_ymd(int year, unsigned month, unsigned day);

  /// Accepts `YYYY-MM-DD` only. Throws IntradayDate when a time component
  /// follows the date; returns nullopt for anything else unparseable.
  static std::optional<Date> parse(std::string_view text);

  constexpr int ordinal() const { return ordinal_; }
  std::string iso() const;
  /// 0 = Monday .. 6 = Sunday
  int weekday() const;

  constexpr auto operator<=>(const Date&) const = default;

 private:
  int ordinal_ = 0;
};

}  // namespace ssaam

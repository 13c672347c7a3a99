#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace quartercast {

/// Abstract fiscal quarter. Fiscal years carry no calendar-month mapping.
struct FiscalQuarter {
  int year = 1;
  int quarter = 1;

  constexpr FiscalQuarter() = default;
  FiscalQuarter(int year, int quarter);

  /// Zero-based quarter count since year 1 Q1.
  constexpr std::int64_t ordinal() const noexcept {
    return static_cast<std::int64_t>(year - 1) * 4 + (quarter - 1);
  }
  static FiscalQuarter from_ordinal(std::int64_t ordinal);

  friend constexpr auto operator<=>(const FiscalQuarter&, const FiscalQuarter&) = default;
};

/// Advance `fq` by `k` quarters (k may be negative).
FiscalQuarter quarter_add(FiscalQuarter fq, std::int64_t k);

/// Signed number of quarters from `from` to `to`.
constexpr std::int64_t quarters_between(FiscalQuarter from, FiscalQuarter to) noexcept {
  return to.ordinal() - from.ordinal();
}

/// "2012Q3"
std::string to_string(FiscalQuarter fq);
/// Parses "2012Q3" (case-insensitive Q).
FiscalQuarter parse_quarter(std::string_view text);

/// Inclusive quarter range.
struct QuarterRange {
  FiscalQuarter first;
  FiscalQuarter last;

  std::int64_t size() const noexcept { return quarters_between(first, last) + 1; }
  bool contains(FiscalQuarter fq) const noexcept { return first <= fq && fq <= last; }

  friend bool operator==(const QuarterRange&, const QuarterRange&) = default;
};

}  // namespace quartercast

#include "quartercast/calendar.hpp"

#include <cctype>
#include <charconv>

#include "quartercast/error.hpp"

namespace quartercast {

FiscalQuarter::FiscalQuarter(int y, int q) : year(y), quarter(q) {
  if (q < 1 || q > 4) {
    throw Error(ErrorKind::validation, "fiscal quarter must be in 1..4, got " + std::to_string(q));
  }
  if (y < 1) {
    throw Error(ErrorKind::calendar_underflow, "fiscal year must be >= 1, got " + std::to_string(y));
  }
}

FiscalQuarter FiscalQuarter::from_ordinal(std::int64_t ordinal) {
  if (ordinal < 0) {
    throw Error(ErrorKind::calendar_underflow, "quarter arithmetic moved before year 1");
  }
  return FiscalQuarter(static_cast<int>(ordinal / 4) + 1, static_cast<int>(ordinal % 4) + 1);
}

FiscalQuarter quarter_add(FiscalQuarter fq, std::int64_t k) {
  return FiscalQuarter::from_ordinal(fq.ordinal() + k);
}

std::string to_string(FiscalQuarter fq) {
  return std::to_string(fq.year) + "Q" + std::to_string(fq.quarter);
}

FiscalQuarter parse_quarter(std::string_view text) {
  auto q = text.find_first_of("qQ");
  if (q == std::string_view::npos || q == 0 || q + 2 != text.size()) {
    throw Error(ErrorKind::validation, "malformed quarter '" + std::string(text) + "', expected e.g. 2012Q3");
  }
  int year = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + q, year);
  if (ec != std::errc() || ptr != text.data() + q) {
    throw Error(ErrorKind::validation, "malformed quarter year in '" + std::string(text) + "'");
  }
  return FiscalQuarter(year, text[q + 1] - '0');
}

}  // namespace quartercast

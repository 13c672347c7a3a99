#pragma once

#include <span>
#include <utility>

#include "quartercast/calendar.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

struct ForecastPair {
  double actual;
  double forecast;
};

/// Absolute percentage error |a - f| / |a| * 100.
double ape(double actual, double forecast);

/// Mean of ape() over a nonempty set of pairs.
double mape(std::span<const ForecastPair> pairs);

/// (baseline - candidate) / baseline * 100. Positive when the candidate has
/// the lower error.
double relative_improvement(double baseline_error, double candidate_error);

/// Year-over-year growth (v(fq) - v(fq-4)) / v(fq-4).
double yoy_growth(const QuarterlySeries& series, FiscalQuarter fq);

}  // namespace quartercast

#include "quartercast/metrics.hpp"

#include <cmath>

#include "quartercast/error.hpp"

namespace quartercast {

double ape(double actual, double forecast) {
  if (actual == 0.0) throw Error(ErrorKind::zero_actual, "APE undefined for a zero actual");
  return std::abs(actual - forecast) / std::abs(actual) * 100.0;
}

double mape(std::span<const ForecastPair> pairs) {
  if (pairs.empty()) throw Error(ErrorKind::empty_set, "MAPE of an empty set");
  double sum = 0.0;
  for (const auto& p : pairs) sum += ape(p.actual, p.forecast);
  return sum / static_cast<double>(pairs.size());
}

double relative_improvement(double baseline_error, double candidate_error) {
  if (baseline_error == 0.0) {
    throw Error(ErrorKind::zero_baseline, "relative improvement undefined for a zero baseline error");
  }
  return (baseline_error - candidate_error) / baseline_error * 100.0;
}

double yoy_growth(const QuarterlySeries& series, FiscalQuarter fq) {
  const auto prior_q = quarter_add(fq, -4);
  if (!series.contains(fq) || !series.contains(prior_q)) {
    throw Error(ErrorKind::out_of_range,
                "YoY growth of '" + series.id() + "' at " + to_string(fq) + " needs " + to_string(prior_q) +
                    " and " + to_string(fq));
  }
  const double prior = series.at(prior_q);
  if (prior == 0.0) {
    throw Error(ErrorKind::zero_denominator,
                "YoY growth of '" + series.id() + "' at " + to_string(fq) + " has a zero prior-year value");
  }
  return (series.at(fq) - prior) / prior;
}

}  // namespace quartercast

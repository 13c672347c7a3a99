#include "quartercast/series.hpp"

#include <algorithm>
#include <cmath>

#include "quartercast/error.hpp"

namespace quartercast {

QuarterlySeries::QuarterlySeries(std::string id, FiscalQuarter first, Eigen::VectorXd values)
    : id_(std::move(id)), first_(first), values_(std::move(values)) {}

FiscalQuarter QuarterlySeries::last() const {
  if (empty()) throw Error(ErrorKind::out_of_range, "series '" + id_ + "' is empty");
  return quarter_add(first_, values_.size() - 1);
}

bool QuarterlySeries::contains(FiscalQuarter fq) const noexcept {
  const auto i = quarters_between(first_, fq);
  return i >= 0 && i < values_.size();
}

Eigen::Index QuarterlySeries::index_of(FiscalQuarter fq) const {
  if (!contains(fq)) {
    throw Error(ErrorKind::out_of_range, "series '" + id_ + "' has no value at " + to_string(fq));
  }
  return quarters_between(first_, fq);
}

FiscalQuarter QuarterlySeries::quarter_at(Eigen::Index i) const {
  if (i < 0 || i >= values_.size()) {
    throw Error(ErrorKind::out_of_range, "series '" + id_ + "' index out of range");
  }
  return quarter_add(first_, i);
}

QuarterlySeries QuarterlySeries::window(FiscalQuarter last, Eigen::Index length) const {
  const auto first = quarter_add(last, -(length - 1));
  if (length <= 0 || !contains(last) || !contains(first)) {
    throw Error(ErrorKind::insufficient_data, "series '" + id_ + "' lacks the " + std::to_string(length) +
                                                  " quarters ending at " + to_string(last));
  }
  return QuarterlySeries(id_, first, values_.segment(index_of(first), length));
}

QuarterlySeries QuarterlySeries::slice(FiscalQuarter first, FiscalQuarter last) const {
  if (empty()) return *this;
  const auto lo = std::max(first, first_);
  const auto hi = std::min(last, this->last());
  if (hi < lo) return QuarterlySeries(id_, lo, Eigen::VectorXd());
  return QuarterlySeries(id_, lo, values_.segment(index_of(lo), quarters_between(lo, hi) + 1));
}

QuarterlySeries QuarterlySeries::extended(const Eigen::VectorXd& more) const {
  Eigen::VectorXd v(values_.size() + more.size());
  v << values_, more;
  return QuarterlySeries(id_, first_, std::move(v));
}

QuarterlySeries QuarterlySeries::with_value(FiscalQuarter fq, double value) const {
  QuarterlySeries copy = *this;
  copy.values_[index_of(fq)] = value;
  return copy;
}

const QuarterlySeries& Dataset::series(const std::string& geo) const {
  if (geo == kTotalId) return total;
  auto it = revenue.find(geo);
  if (it == revenue.end()) throw Error(ErrorKind::unknown_geography, "unknown geography '" + geo + "'");
  return it->second;
}

std::vector<std::string> Dataset::geographies_with_total() const {
  std::vector<std::string> out;
  out.reserve(revenue.size() + 1);
  for (const auto& [geo, _] : revenue) out.push_back(geo);
  out.emplace_back(kTotalId);
  return out;
}

const QuarterlySeries& Dataset::indicator(const std::string& geo, const std::string& indicator) const {
  auto it = indicators.find({geo, indicator});
  if (it == indicators.end()) {
    throw Error(ErrorKind::missing_indicator, "indicator '" + indicator + "' missing for '" + geo + "'");
  }
  return it->second;
}

bool Dataset::has_indicator(const std::string& geo, const std::string& indicator) const {
  return indicators.contains({geo, indicator});
}

QuarterlySeries sum_geographies(const std::map<std::string, QuarterlySeries>& revenue) {
  if (revenue.empty()) throw Error(ErrorKind::validation, "dataset has no geographies");
  FiscalQuarter lo = revenue.begin()->second.first();
  FiscalQuarter hi = revenue.begin()->second.last();
  for (const auto& [_, s] : revenue) {
    lo = std::min(lo, s.first());
    hi = std::max(hi, s.last());
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(quarters_between(lo, hi) + 1);
  std::vector<bool> covered(static_cast<std::size_t>(sum.size()), false);
  for (const auto& [_, s] : revenue) {
    const auto offset = quarters_between(lo, s.first());
    sum.segment(offset, s.size()) += s.values();
    for (Eigen::Index i = 0; i < s.size(); ++i) covered[static_cast<std::size_t>(offset + i)] = true;
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) {
      throw Error(ErrorKind::contiguity,
                  "no geography covers " + to_string(quarter_add(lo, static_cast<std::int64_t>(i))) +
                      "; TOTAL would have a gap");
    }
  }
  return QuarterlySeries(kTotalId, lo, std::move(sum));
}

Dataset make_dataset(std::map<std::string, QuarterlySeries> revenue, std::optional<QuarterlySeries> total,
                     std::map<IndicatorKey, QuarterlySeries> indicators) {
  for (const auto& [geo, s] : revenue) {
    if (geo == kTotalId) throw Error(ErrorKind::validation, "TOTAL is reserved for the aggregate series");
    if (s.empty()) throw Error(ErrorKind::validation, "geography '" + geo + "' has no data");
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (!(s.values()[i] > 0.0) || !std::isfinite(s.values()[i])) {
        throw Error(ErrorKind::validation, "revenue must be positive: " + geo + " " + to_string(s.quarter_at(i)));
      }
    }
  }
  auto computed = sum_geographies(revenue);
  if (total) {
    if (total->first() != computed.first() || total->size() != computed.size()) {
      throw Error(ErrorKind::validation, "TOTAL range does not match the union of geography ranges");
    }
    for (Eigen::Index i = 0; i < computed.size(); ++i) {
      const double want = computed.values()[i];
      const double got = total->values()[i];
      if (std::abs(got - want) > 1e-9 * std::abs(want)) {
        throw Error(ErrorKind::validation, "TOTAL at " + to_string(computed.quarter_at(i)) +
                                               " differs from the sum of geographies");
      }
    }
    computed = QuarterlySeries(kTotalId, total->first(), total->values());
  }
  for (const auto& [key, s] : indicators) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (!(s.values()[i] > 0.0) || !std::isfinite(s.values()[i])) {
        throw Error(ErrorKind::validation, "indicator values must be positive: " + key.first + "/" + key.second +
                                               " " + to_string(s.quarter_at(i)));
      }
    }
  }
  return Dataset{std::move(revenue), std::move(computed), std::move(indicators)};
}

}  // namespace quartercast

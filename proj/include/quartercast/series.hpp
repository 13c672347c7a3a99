#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quartercast/calendar.hpp"

namespace quartercast {

inline constexpr const char* kTotalId = "TOTAL";

/// Contiguous run of quarterly values. Contiguity is structural: only the
/// first quarter is stored, every later point is one quarter after the last.
class QuarterlySeries {
 public:
  QuarterlySeries() = default;
  QuarterlySeries(std::string id, FiscalQuarter first, Eigen::VectorXd values);

  const std::string& id() const noexcept { return id_; }
  FiscalQuarter first() const noexcept { return first_; }
  FiscalQuarter last() const;
  QuarterRange range() const { return {first_, last()}; }
  Eigen::Index size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.size() == 0; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  bool contains(FiscalQuarter fq) const noexcept;
  /// Position of `fq` in values(); throws out_of_range when absent.
  Eigen::Index index_of(FiscalQuarter fq) const;
  double at(FiscalQuarter fq) const { return values_[index_of(fq)]; }
  FiscalQuarter quarter_at(Eigen::Index i) const;

  /// The `length` quarters ending at `last` (inclusive).
  QuarterlySeries window(FiscalQuarter last, Eigen::Index length) const;
  /// Points in [first, last] intersected with this series' range.
  QuarterlySeries slice(FiscalQuarter first, FiscalQuarter last) const;
  /// Copy with `more` appended after last().
  QuarterlySeries extended(const Eigen::VectorXd& more) const;
  QuarterlySeries with_value(FiscalQuarter fq, double value) const;

  friend bool operator==(const QuarterlySeries& a, const QuarterlySeries& b) {
    return a.id_ == b.id_ && a.first_ == b.first_ && a.values_.size() == b.values_.size() &&
           a.values_ == b.values_;
  }

 private:
  std::string id_;
  FiscalQuarter first_;
  Eigen::VectorXd values_;
};

using IndicatorKey = std::pair<std::string, std::string>;  // (geo, indicator)

/// Revenue per geography, the aggregate TOTAL series, and macro indicators.
struct Dataset {
  std::map<std::string, QuarterlySeries> revenue;
  QuarterlySeries total;
  std::map<IndicatorKey, QuarterlySeries> indicators;

  /// Revenue series for a geography id, or TOTAL.
  const QuarterlySeries& series(const std::string& geo) const;
  /// Geography ids in sorted order followed by TOTAL.
  std::vector<std::string> geographies_with_total() const;
  const QuarterlySeries& indicator(const std::string& geo, const std::string& indicator) const;
  bool has_indicator(const std::string& geo, const std::string& indicator) const;
};

/// Builds a Dataset, computing TOTAL as the per-quarter sum when `total` is
/// absent, or validating a supplied TOTAL against that sum (relative
/// tolerance 1e-9). Revenue must be strictly positive.
Dataset make_dataset(std::map<std::string, QuarterlySeries> revenue,
                     std::optional<QuarterlySeries> total = std::nullopt,
                     std::map<IndicatorKey, QuarterlySeries> indicators = {});

/// Per-quarter sum over geographies, covering the union of their ranges.
QuarterlySeries sum_geographies(const std::map<std::string, QuarterlySeries>& revenue);

}  // namespace quartercast

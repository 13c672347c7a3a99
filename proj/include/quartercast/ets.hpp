#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quartercast/nelder_mead.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

enum class Trend { none, additive, damped };
enum class Season { none, additive };

/// Additive-error exponential smoothing model; error is always additive.
struct EtsSpec {
  Trend trend = Trend::none;
  Season seasonal = Season::none;

  friend bool operator==(const EtsSpec&, const EtsSpec&) = default;
};

std::string to_string(const EtsSpec& spec);

struct EtsParameters {
  double alpha = 0.5;
  double beta = 0.0;   // used when trend != none
  double gamma = 0.0;  // used when seasonal != none
  double phi = 1.0;    // < 1 only for damped trend
};

/// Level, trend and the four seasonal effects indexed by phase (t mod 4).
struct EtsState {
  double level = 0.0;
  double trend = 0.0;
  std::array<double, 4> seasonal{};
};

struct EtsFit {
  EtsSpec spec;
  double alpha = 0.0;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> phi_damp;
  double initial_level = 0.0;
  std::optional<double> initial_trend;
  std::optional<std::array<double, 4>> initial_seasonal;  // sums to zero
  double sse = 0.0;
  double aicc = 0.0;
  Eigen::Index n = 0;
  EtsState final_state;
};

struct EtsOptions {
  /// Pins alpha instead of estimating it (may be exactly 0 or 1).
  std::optional<double> fixed_alpha;
  NelderMeadOptions optimizer{1e-10, 2000, 0.1};
  RestartOptions restarts{};
};

struct EtsFilterResult {
  Eigen::VectorXd errors;  // one-step-ahead errors y_t - yhat_t
  EtsState final_state;
};

/// Runs the additive state-space recursions over y from `initial`.
EtsFilterResult ets_filter(const Eigen::VectorXd& y, const EtsSpec& spec, const EtsParameters& params,
                           const EtsState& initial);

/// Estimates smoothing parameters by simplex search; for each candidate the
/// initial states are the exact least-squares minimisers of the one-step SSE
/// (errors are affine in the initial states for additive models).
EtsFit fit_ets(const QuarterlySeries& series, const EtsSpec& spec, const EtsOptions& options = {});

/// {none, additive, damped} x {none, additive} in enumeration order.
std::vector<EtsSpec> ets_specs();

/// Lowest-AICc fit over `candidates` (default: all specs); earlier specs win ties.
EtsFit auto_select_ets(const QuarterlySeries& series, const std::vector<EtsSpec>& candidates = ets_specs(),
                       const EtsOptions& options = {});

/// Point forecasts for steps 1..h (1 <= h <= 8).
Eigen::VectorXd forecast_ets(const EtsFit& fit, int h);

}  // namespace quartercast

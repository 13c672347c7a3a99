#include "quartercast/ets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quartercast/detail/aicc.hpp"
#include "quartercast/error.hpp"

namespace quartercast {
namespace {

constexpr double kAlphaLo = 1e-4, kAlphaHi = 0.9999;
constexpr double kBetaLo = 1e-4, kGammaLo = 1e-4;
constexpr double kPhiLo = 0.8, kPhiHi = 0.98;

bool has_trend(const EtsSpec& s) { return s.trend != Trend::none; }
bool has_season(const EtsSpec& s) { return s.seasonal != Season::none; }

int initial_state_count(const EtsSpec& s) { return 1 + (has_trend(s) ? 1 : 0) + (has_season(s) ? 3 : 0); }

int smoothing_count(const EtsSpec& s) {
  return 1 + (has_trend(s) ? 1 : 0) + (has_season(s) ? 1 : 0) + (s.trend == Trend::damped ? 1 : 0);
}

EtsState state_from_vector(const EtsSpec& spec, const Eigen::VectorXd& x) {
  EtsState st;
  Eigen::Index at = 0;
  st.level = x[at++];
  if (has_trend(spec)) st.trend = x[at++];
  if (has_season(spec)) {
    st.seasonal = {x[at], x[at + 1], x[at + 2], -(x[at] + x[at + 1] + x[at + 2])};
  }
  return st;
}

// Clips the unconstrained simplex coordinates into the admissible box and
// reports how far outside the box they were.
struct Decoded {
  EtsParameters params;
  double outside = 0.0;
};

double clip(double v, double lo, double hi, double& outside) {
  if (v < lo) {
    outside += lo - v;
    return lo;
  }
  if (v > hi) {
    outside += v - hi;
    return hi;
  }
  return v;
}

Decoded decode(const EtsSpec& spec, const std::optional<double>& fixed_alpha, const Eigen::VectorXd& u) {
  Decoded d;
  Eigen::Index at = 0;
  d.params.alpha = fixed_alpha ? *fixed_alpha : clip(u[at++], kAlphaLo, kAlphaHi, d.outside);
  const double a = d.params.alpha;
  if (has_trend(spec)) d.params.beta = clip(u[at++], kBetaLo, std::max(kBetaLo, a), d.outside);
  if (has_season(spec)) d.params.gamma = clip(u[at++], kGammaLo, std::max(kGammaLo, 1.0 - a), d.outside);
  d.params.phi = 1.0;
  if (spec.trend == Trend::damped) d.params.phi = clip(u[at++], kPhiLo, kPhiHi, d.outside);
  return d;
}

Eigen::VectorXd heuristic_initial_states(const EtsSpec& spec, const Eigen::VectorXd& y) {
  Eigen::VectorXd x(initial_state_count(spec));
  const double first_year = y.head(4).mean();
  Eigen::Index at = 0;
  x[at++] = first_year;
  if (has_trend(spec)) x[at++] = (y.segment(4, 4).mean() - first_year) / 4.0;
  if (has_season(spec)) {
    const Eigen::VectorXd dev = y.head(4).array() - first_year;
    x.segment(at, 3) = dev.head(3);
  }
  return x;
}

struct Profiled {
  Eigen::VectorXd initial;
  double sse;
};

// The one-step errors are e = e0 + J x for initial-state vector x; solve the
// least-squares problem anchored at the heuristic so rank-deficient cases
// stay near it.
Profiled profile_initial_states(const Eigen::VectorXd& y, const EtsSpec& spec, const EtsParameters& params,
                                const Eigen::VectorXd& anchor) {
  const Eigen::Index k = anchor.size();
  const Eigen::Index n = y.size();
  const Eigen::VectorXd e0 = ets_filter(y, spec, params, EtsState{}).errors;
  Eigen::MatrixXd J(n, k);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < k; ++j) {
    J.col(j) = ets_filter(zeros, spec, params, state_from_vector(spec, Eigen::VectorXd::Unit(k, j))).errors;
  }
  const Eigen::VectorXd r = e0 + J * anchor;
  const Eigen::VectorXd delta = J.completeOrthogonalDecomposition().solve(-r);
  Profiled out{anchor + delta, 0.0};
  out.sse = ets_filter(y, spec, params, state_from_vector(spec, out.initial)).errors.squaredNorm();
  return out;
}

double scale_of(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

std::string to_string(const EtsSpec& spec) {
  const char* t = spec.trend == Trend::none ? "N" : spec.trend == Trend::additive ? "A" : "Ad";
  const char* s = spec.seasonal == Season::none ? "N" : "A";
  return std::string("ETS(A,") + t + "," + s + ")";
}

EtsFilterResult ets_filter(const Eigen::VectorXd& y, const EtsSpec& spec, const EtsParameters& params,
                           const EtsState& initial) {
  EtsFilterResult out;
  out.errors.resize(y.size());
  EtsState st = initial;
  const bool trend = has_trend(spec);
  const bool season = has_season(spec);
  const double phi = spec.trend == Trend::damped ? params.phi : 1.0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const auto phase = static_cast<std::size_t>(t % 4);
    const double damped_trend = trend ? phi * st.trend : 0.0;
    const double seasonal = season ? st.seasonal[phase] : 0.0;
    const double e = y[t] - (st.level + damped_trend + seasonal);
    out.errors[t] = e;
    st.level = st.level + damped_trend + params.alpha * e;
    if (trend) st.trend = damped_trend + params.beta * e;
    if (season) st.seasonal[phase] = seasonal + params.gamma * e;
  }
  out.final_state = st;
  return out;
}

EtsFit fit_ets(const QuarterlySeries& series, const EtsSpec& spec, const EtsOptions& options) {
  const Eigen::VectorXd& y = series.values();
  if (y.size() < 8) {
    throw Error(ErrorKind::insufficient_data, to_string(spec) + " needs at least 8 points, have " +
                                                  std::to_string(y.size()));
  }
  if (!y.allFinite()) throw Error(ErrorKind::validation, "non-finite values in series '" + series.id() + "'");
  if (options.fixed_alpha && (*options.fixed_alpha < 0.0 || *options.fixed_alpha > 1.0)) {
    throw Error(ErrorKind::validation, "fixed alpha must lie in [0, 1]");
  }

  const Eigen::VectorXd anchor = heuristic_initial_states(spec, y);
  auto objective = [&](const Eigen::VectorXd& u) {
    const auto d = decode(spec, options.fixed_alpha, u);
    const double sse = profile_initial_states(y, spec, d.params, anchor).sse;
    return sse * (1.0 + d.outside) + d.outside;
  };

  const int free_smoothing = smoothing_count(spec) - (options.fixed_alpha ? 1 : 0);
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  if (free_smoothing == 0) {
    best.x = Eigen::VectorXd();
    best.value = objective(best.x);
  } else {
    // A few spread-out starting points for alpha guard against the flat
    // regions created by clipping.
    for (double alpha0 : {0.2, 0.5, 0.8}) {
      Eigen::VectorXd x0(free_smoothing);
      Eigen::Index at = 0;
      if (!options.fixed_alpha) x0[at++] = alpha0;
      const double a = options.fixed_alpha.value_or(alpha0);
      if (has_trend(spec)) x0[at++] = std::max(kBetaLo, 0.1 * a);
      if (has_season(spec)) x0[at++] = std::max(kGammaLo, 0.1 * (1.0 - a));
      if (spec.trend == Trend::damped) x0[at++] = 0.9;
      auto run = minimize_with_restarts(objective, x0, options.optimizer, options.restarts);
      if (run.value < best.value) best = std::move(run);
      if (options.fixed_alpha && !has_trend(spec) && !has_season(spec)) break;
    }
  }

  const auto params = decode(spec, options.fixed_alpha, best.x).params;
  const auto profiled = profile_initial_states(y, spec, params, anchor);
  const EtsState initial = state_from_vector(spec, profiled.initial);
  const auto filtered = ets_filter(y, spec, params, initial);

  EtsFit fit;
  fit.spec = spec;
  fit.alpha = params.alpha;
  if (has_trend(spec)) {
    fit.beta = params.beta;
    fit.initial_trend = initial.trend;
  }
  if (spec.trend == Trend::damped) fit.phi_damp = params.phi;
  if (has_season(spec)) {
    fit.gamma = params.gamma;
    fit.initial_seasonal = initial.seasonal;
  }
  fit.initial_level = initial.level;
  fit.sse = filtered.errors.squaredNorm();
  fit.n = y.size();
  fit.final_state = filtered.final_state;
  const double k = free_smoothing + initial_state_count(spec) + 1.0;
  fit.aicc = detail::gaussian_aicc(fit.sse, static_cast<double>(y.size()), k, scale_of(y));
  return fit;
}

std::vector<EtsSpec> ets_specs() {
  std::vector<EtsSpec> specs;
  for (auto t : {Trend::none, Trend::additive, Trend::damped}) {
    for (auto s : {Season::none, Season::additive}) specs.push_back({t, s});
  }
  return specs;
}

EtsFit auto_select_ets(const QuarterlySeries& series, const std::vector<EtsSpec>& candidates,
                       const EtsOptions& options) {
  if (series.size() < 8) throw Error(ErrorKind::insufficient_data, "ETS selection needs at least 8 points");
  if (candidates.empty()) throw Error(ErrorKind::validation, "no ETS candidates given");
  std::optional<EtsFit> best;
  for (const auto& spec : candidates) {
    auto fit = fit_ets(series, spec, options);
    if (!best || fit.aicc < best->aicc) best = std::move(fit);
  }
  return *std::move(best);
}

Eigen::VectorXd forecast_ets(const EtsFit& fit, int h) {
  if (h < 1 || h > 8) throw Error(ErrorKind::validation, "ETS forecast horizon must be in 1..8");
  Eigen::VectorXd out(h);
  const auto& st = fit.final_state;
  const double phi = fit.phi_damp.value_or(1.0);
  double trend_sum = 0.0;
  double phi_power = 1.0;
  for (int k = 1; k <= h; ++k) {
    phi_power *= phi;
    trend_sum += phi_power;
    double value = st.level;
    if (fit.spec.trend != Trend::none) value += trend_sum * st.trend;
    if (fit.spec.seasonal != Season::none) {
      value += st.seasonal[static_cast<std::size_t>((fit.n + k - 1) % 4)];
    }
    out[k - 1] = value;
  }
  return out;
}

}  // namespace quartercast

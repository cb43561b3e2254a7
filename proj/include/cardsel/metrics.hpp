#pragma once

/**
 * @file metrics.hpp
 * @brief Portfolio evaluation, constraint checking and decompositions.
 *
 * For a long-only portfolio w on the simplex:
 *
 *     mu_p    = w' mu
 *     sigma_p = sqrt(w' Sigma w)        (factor form, O(|support|))
 *     S_p     = (mu_p - rf) / sigma_p
 *     beta_p  = w' beta
 *
 * Everything here is a pure function of immutable inputs.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cardsel/calibration.hpp"
#include "cardsel/error.hpp"

namespace cardsel {

inline constexpr double kSimplexTolerance = 1e-9;

/// Long-only portfolio stored sparsely: weights[k] belongs to asset support[k].
struct Portfolio {
  std::vector<std::size_t> support;
  std::vector<double> weights;

  static Portfolio equal_weight(std::vector<std::size_t> support) {
    Portfolio p;
    const double w = 1.0 / static_cast<double>(support.size());
    p.weights.assign(support.size(), w);
    p.support = std::move(support);
    return p;
  }

  /// Number of strictly positive weights, |supp(w)|.
  std::size_t cardinality() const {
    return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  }

  /// Checks shape, index range, distinctness, nonnegativity and the budget
  /// constraint; throws InvalidInput describing the first problem.
  void validate(std::size_t n) const {
    if (support.empty()) fail(ErrorKind::InvalidInput, "portfolio has empty support");
    if (support.size() != weights.size()) fail(ErrorKind::InvalidInput, "portfolio support/weights size mismatch");
    std::vector<std::size_t> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorKind::InvalidInput, "portfolio support has duplicate indices");
    if (sorted.back() >= n) fail(ErrorKind::InvalidInput, "portfolio index out of range");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) fail(ErrorKind::InvalidInput, "portfolio has a negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
      fail(ErrorKind::InvalidInput, "portfolio weights sum to " + format_double(total) + ", expected 1");
  }
};

enum class SharpeStatus {
  Finite,
  RisklessAbove,  ///< sigma_p == 0, mu_p > rf: sharpe = +inf
  RisklessBelow,  ///< sigma_p == 0, mu_p < rf: sharpe = -inf
  RisklessFlat    ///< sigma_p == 0, mu_p == rf: sharpe = 0
};

struct PortfolioEvaluation {
  double mu_p = 0.0;
  double variance = 0.0;
  double sigma_p = 0.0;
  double sharpe = 0.0;
  double beta_p = 0.0;
  SharpeStatus status = SharpeStatus::Finite;

  bool degenerate() const { return status != SharpeStatus::Finite; }
};

inline double sharpe_ratio(double mu_p, double sigma_p, double rf, SharpeStatus* status = nullptr) {
  SharpeStatus s = SharpeStatus::Finite;
  double value;
  if (sigma_p > 0.0) {
    value = (mu_p - rf) / sigma_p;
  } else if (mu_p > rf) {
    s = SharpeStatus::RisklessAbove;
    value = std::numeric_limits<double>::infinity();
  } else if (mu_p < rf) {
    s = SharpeStatus::RisklessBelow;
    value = -std::numeric_limits<double>::infinity();
  } else {
    s = SharpeStatus::RisklessFlat;
    value = 0.0;
  }
  if (status) *status = s;
  return value;
}

/// Unchecked hot-path evaluation on a (support, weights) pair.
inline PortfolioEvaluation evaluate_weights(std::span<const std::size_t> support, std::span<const double> w,
                                            const Universe& universe, const FactorCovariance& fc) {
  PortfolioEvaluation e;
  const auto& mu = universe.mu();
  const auto& beta = fc.beta();
  double bw = 0.0, idio = 0.0, m = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const std::size_t i = support[k];
    m += w[k] * mu[i];
    bw += w[k] * beta[i];
    idio += w[k] * w[k] * fc.resid_var()[i];
  }
  e.mu_p = m;
  e.beta_p = bw;
  e.variance = bw * bw * fc.var_m() + idio;
  e.sigma_p = std::sqrt(e.variance);
  e.sharpe = sharpe_ratio(e.mu_p, e.sigma_p, universe.market().rf, &e.status);
  return e;
}

inline PortfolioEvaluation evaluate(const Portfolio& p, const Universe& universe, const FactorCovariance& fc) {
  if (fc.size() != universe.size()) fail(ErrorKind::InvalidInput, "universe and covariance sizes differ");
  p.validate(universe.size());
  return evaluate_weights(p.support, p.weights, universe, fc);
}

/// Screening proxy (beta_i * erp) / sigma_i; not a realized Sharpe ratio.
inline double capm_sharpe_proxy(const AssetRecord& asset, const MarketParams& market) {
  if (!(asset.sigma > 0.0)) fail(ErrorKind::InvalidInput, "capm_sharpe_proxy: sigma must be > 0");
  return asset.beta * market.erp / asset.sigma;
}

/// Euler decomposition RC_i = w_i (Sigma w)_i / (w' Sigma w), in support order.
inline std::vector<double> risk_contributions(const Portfolio& p, const FactorCovariance& fc) {
  p.validate(fc.size());
  const double var = fc.quadratic_form(p.support, p.weights);
  if (!(var > 0.0)) fail(ErrorKind::InvalidInput, "risk_contributions: portfolio variance is zero");
  auto sw = fc.times(p.support, p.weights);
  for (std::size_t k = 0; k < sw.size(); ++k) sw[k] = p.weights[k] * sw[k] / var;
  return sw;
}

/// One-half L1 distance between two portfolios over the union of supports.
inline double turnover(const Portfolio& current, const Portfolio& reference) {
  std::map<std::size_t, double> diff;
  for (std::size_t k = 0; k < current.support.size(); ++k) diff[current.support[k]] += current.weights[k];
  for (std::size_t k = 0; k < reference.support.size(); ++k) diff[reference.support[k]] -= reference.weights[k];
  double l1 = 0.0;
  for (const auto& [_, d] : diff) l1 += std::abs(d);
  return 0.5 * l1;
}

/// Evaluation with mu reduced by cost_rate * turnover(p, reference).
inline PortfolioEvaluation net_sharpe(const Portfolio& p, const Portfolio& reference, double cost_rate,
                                      const Universe& universe, const FactorCovariance& fc) {
  if (!(cost_rate >= 0.0)) fail(ErrorKind::InvalidInput, "net_sharpe: cost_rate must be >= 0");
  PortfolioEvaluation e = evaluate(p, universe, fc);
  e.mu_p -= cost_rate * turnover(p, reference);
  e.sharpe = sharpe_ratio(e.mu_p, e.sigma_p, universe.market().rf, &e.status);
  return e;
}

/// An asset held outside the cardinality count, with its own weight cap.
struct Overlay {
  std::size_t index = 0;
  double cap = 0.0;
};

struct ConstraintSet {
  std::size_t k = 1;
  std::optional<double> weight_cap;                    ///< scalar u applied to every asset
  std::vector<double> asset_caps;                      ///< optional per-asset u_i (empty or size n)
  std::optional<std::pair<double, double>> beta_band;  ///< [lo, hi] on beta_p
  std::optional<double> min_return;                    ///< r*
  std::optional<Overlay> overlay;

  double cap_for(std::size_t i) const {
    double cap = weight_cap.value_or(1.0);
    if (!asset_caps.empty()) cap = std::min(cap, asset_caps[i]);
    if (overlay && overlay->index == i) cap = std::min(cap, overlay->cap);
    return cap;
  }

  bool counts_toward_k(std::size_t i) const { return !(overlay && overlay->index == i); }

  bool has_caps() const { return weight_cap.has_value() || !asset_caps.empty() || overlay.has_value(); }

  /// Structural feasibility, checked before any solver runs.
  void validate(std::size_t n) const {
    const std::size_t pool = overlay ? n - 1 : n;
    if (k < 1 || k > pool)
      fail(ErrorKind::InvalidInput, "cardinality k=" + std::to_string(k) + " must satisfy 1 <= k <= " + std::to_string(pool));
    if (weight_cap) {
      if (!(*weight_cap > 0.0)) fail(ErrorKind::InvalidInput, "weight cap must be > 0");
      const double reach = static_cast<double>(k) * *weight_cap + (overlay ? overlay->cap : 0.0);
      if (reach < 1.0 - 1e-12)
        fail(ErrorKind::Infeasible, "structurally infeasible: k * cap = " + format_double(reach) + " < 1");
    }
    if (!asset_caps.empty() && asset_caps.size() != n)
      fail(ErrorKind::InvalidInput, "per-asset caps must have one entry per asset");
    if (beta_band && beta_band->first > beta_band->second)
      fail(ErrorKind::InvalidInput, "beta band lower bound exceeds upper bound");
    if (overlay) {
      if (overlay->index >= n) fail(ErrorKind::InvalidInput, "overlay index out of range");
      if (!(overlay->cap > 0.0 && overlay->cap <= 1.0))
        fail(ErrorKind::InvalidInput, "overlay cap must lie in (0, 1]");
    }
  }
};

enum class ViolationKind {
  InvalidPortfolio,
  Variance,
  Return,
  Budget,
  Negative,
  Cardinality,
  WeightCap,
  BetaBand,
  MinReturn
};

inline std::string_view to_string(ViolationKind v) {
  switch (v) {
    case ViolationKind::InvalidPortfolio: return "invalid_portfolio";
    case ViolationKind::Variance: return "variance";
    case ViolationKind::Return: return "return";
    case ViolationKind::Budget: return "budget";
    case ViolationKind::Negative: return "negative_weight";
    case ViolationKind::Cardinality: return "cardinality";
    case ViolationKind::WeightCap: return "weight_cap";
    case ViolationKind::BetaBand: return "beta_band";
    case ViolationKind::MinReturn: return "min_return";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct DecisionResult {
  bool feasible = true;
  std::vector<Violation> violations;
};

namespace detail {
inline bool leq(double a, double b) { return a <= b + 1e-12 * std::max(1.0, std::abs(b)); }
}  // namespace detail

/// Certificate check for the decision problem: does w satisfy
/// w'Sigma w <= V*, mu'w >= R*, 1'w = 1, w >= 0, |supp(w)| <= K and the
/// optional cap / beta-band / target-return constraints? Collects every
/// violation. Runs in O(|support|) through the factor form.
inline DecisionResult verify_decision(const Portfolio& p, double max_variance, double min_mu,
                                      const ConstraintSet& constraints, const Universe& universe,
                                      const FactorCovariance& fc) {
  DecisionResult out;
  auto flag = [&](ViolationKind kind, std::string detail) {
    out.feasible = false;
    out.violations.push_back({kind, std::move(detail)});
  };

  const std::size_t n = universe.size();
  if (p.support.size() != p.weights.size() || p.support.empty()) {
    flag(ViolationKind::InvalidPortfolio, "support/weights shape mismatch or empty");
    return out;
  }
  {
    std::vector<std::size_t> sorted = p.support;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() >= n || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      flag(ViolationKind::InvalidPortfolio, "support indices out of range or repeated");
      return out;
    }
  }

  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < p.support.size(); ++k) {
    const double w = p.weights[k];
    const std::size_t i = p.support[k];
    total += w;
    if (w < 0.0) flag(ViolationKind::Negative, "w[" + universe.asset(i).id + "] = " + format_double(w));
    if (w > 0.0 && constraints.counts_toward_k(i)) ++counted;
    if (w > 0.0 && !detail::leq(w, constraints.cap_for(i)))
      flag(ViolationKind::WeightCap, "w[" + universe.asset(i).id + "] = " + format_double(w) + " > cap " +
                                         format_double(constraints.cap_for(i)));
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) flag(ViolationKind::Budget, "sum w = " + format_double(total));
  if (counted > constraints.k)
    flag(ViolationKind::Cardinality, "|supp(w)| = " + std::to_string(counted) + " > K = " + std::to_string(constraints.k));

  const auto e = evaluate_weights(p.support, p.weights, universe, fc);
  if (!detail::leq(e.variance, max_variance))
    flag(ViolationKind::Variance, "w'Sigma w = " + format_double(e.variance) + " > V* = " + format_double(max_variance));
  if (!detail::leq(min_mu, e.mu_p))
    flag(ViolationKind::Return, "mu'w = " + format_double(e.mu_p) + " < R* = " + format_double(min_mu));
  if (constraints.min_return && !detail::leq(*constraints.min_return, e.mu_p))
    flag(ViolationKind::MinReturn, "mu'w = " + format_double(e.mu_p) + " < r* = " + format_double(*constraints.min_return));
  if (constraints.beta_band) {
    const auto [lo, hi] = *constraints.beta_band;
    if (!detail::leq(lo, e.beta_p) || !detail::leq(e.beta_p, hi))
      flag(ViolationKind::BetaBand, "beta_p = " + format_double(e.beta_p) + " outside [" + format_double(lo) + ", " +
                                        format_double(hi) + "]");
  }
  return out;
}

/// Constraint check without the (V*, R*) objective thresholds.
inline bool satisfies(const Portfolio& p, const ConstraintSet& constraints, const Universe& universe,
                      const FactorCovariance& fc) {
  return verify_decision(p, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                         constraints, universe, fc)
      .feasible;
}

}  // namespace cardsel

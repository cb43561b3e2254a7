#pragma once

/**
 * @file derivatives.hpp
 * @brief Black-Scholes European calls and their delta-linearized embedding as
 *        a synthetic CAPM asset.
 *
 *     d1 = [ln(S0/K) + (r + vol^2/2) T] / (vol sqrt(T)),   d2 = d1 - vol sqrt(T)
 *     C  = S0 N(d1) - K exp(-rT) N(d2),                    Delta = N(d1)
 *     L  = Delta S0 / C
 *
 * The option inherits the underlying's moments scaled by L:
 *
 *     beta_opt = L beta,  sigma_opt = L sigma,  mu_opt = rf + beta_opt erp
 *
 * and its residual variance is backed out by matching total variance under
 * the single-index model. Only first-order (delta) effects are represented.
 */

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cardsel/calibration.hpp"
#include "cardsel/error.hpp"
#include "cardsel/metrics.hpp"

namespace cardsel {

/// Standard normal CDF via erfc; absolute error is at the level of double
/// rounding (~1e-16), comfortably inside the 1e-8 contract.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct OptionSpec {
  std::string underlying_id;
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 0.5;  ///< years
  double rate = 0.0;      ///< annual risk-free, decimal
  double vol = 0.0;       ///< annual volatility, decimal

  /// Contract on `underlying` with vol defaulting to the underlying's sigma.
  static OptionSpec on(const AssetRecord& underlying, double s0, double strike, double maturity, double rate,
                       std::optional<double> vol_override = std::nullopt) {
    return {underlying.id, s0, strike, maturity, rate, vol_override.value_or(underlying.sigma)};
  }

  void validate() const {
    if (!(s0 > 0.0) || !(strike > 0.0) || !(maturity > 0.0) || !(vol > 0.0) || !std::isfinite(rate))
      fail(ErrorKind::InvalidInput, "option spec requires s0, strike, maturity, vol > 0 and finite rate");
  }
};

struct OptionDiagnostics {
  double price = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double delta = 0.0;
  double leverage = 0.0;
};

inline OptionDiagnostics bs_call_price(const OptionSpec& spec) {
  spec.validate();
  OptionDiagnostics out;
  const double vst = spec.vol * std::sqrt(spec.maturity);
  out.d1 = (std::log(spec.s0 / spec.strike) + (spec.rate + 0.5 * spec.vol * spec.vol) * spec.maturity) / vst;
  out.d2 = out.d1 - vst;
  out.delta = normal_cdf(out.d1);
  out.price = spec.s0 * out.delta - spec.strike * std::exp(-spec.rate * spec.maturity) * normal_cdf(out.d2);
  out.leverage = out.price > 0.0 ? out.delta * spec.s0 / out.price : std::numeric_limits<double>::infinity();
  return out;
}

struct OptionEmbedding {
  std::string underlying_id;
  double leverage = 1.0;
  double beta_opt = 0.0;
  double sigma_opt = 0.0;
  double mu_opt = 0.0;
  std::optional<double> resid_var;  ///< known once sigma_m is configured
  bool counts_toward_k = true;
};

/// Embedding for a given leverage factor; exposed separately so the L = 1
/// identity and hand-built instruments can be checked directly.
inline OptionEmbedding embed_with_leverage(double leverage, const AssetRecord& underlying, const MarketParams& market) {
  OptionEmbedding e;
  e.underlying_id = underlying.id;
  e.leverage = leverage;
  e.beta_opt = leverage * underlying.beta;
  e.sigma_opt = leverage * underlying.sigma;
  e.mu_opt = market.rf + e.beta_opt * market.erp;
  if (market.sigma_m) {
    const double var_m = market.var_m();
    e.resid_var = std::max(0.0, e.sigma_opt * e.sigma_opt - e.beta_opt * e.beta_opt * var_m);
  }
  return e;
}

inline OptionEmbedding embed_option(const OptionSpec& spec, const AssetRecord& underlying, const MarketParams& market) {
  const auto diag = bs_call_price(spec);
  if (!(diag.price > 0.0))
    fail(ErrorKind::Internal, "call price " + format_double(diag.price) + " is not positive for a valid contract");
  return embed_with_leverage(diag.leverage, underlying, market);
}

struct AugmentedUniverse {
  Universe universe;
  FactorCovariance fc;
  std::size_t option_index;
  bool counts_toward_k;
  std::optional<double> overlay_cap;

  /// Constraint set adjusted for the option's cardinality accounting.
  ConstraintSet constraints(ConstraintSet base) const {
    if (!counts_toward_k) base.overlay = Overlay{option_index, *overlay_cap};
    return base;
  }
};

/// Appends the option as asset n. Its covariance with asset i is
/// beta_i beta_opt var_m and its variance is sigma_opt^2 (residual clipped at
/// zero as for any asset). Overlay mode (not counted toward K) requires an
/// explicit overlay cap.
inline AugmentedUniverse augment_universe(const Universe& universe, const FactorCovariance& fc,
                                          const OptionEmbedding& embedding,
                                          std::optional<double> overlay_cap = std::nullopt,
                                          std::string option_id = {}) {
  if (!embedding.counts_toward_k && !overlay_cap)
    fail(ErrorKind::InvalidInput, "an option held as an overlay outside K requires an explicit overlay cap");
  if (overlay_cap && !(*overlay_cap > 0.0 && *overlay_cap <= 1.0))
    fail(ErrorKind::InvalidInput, "overlay cap must lie in (0, 1]");
  if (!universe.index_of(embedding.underlying_id))
    fail(ErrorKind::InvalidInput, "underlying '" + embedding.underlying_id + "' is not in the universe");

  if (option_id.empty()) option_id = "call:" + embedding.underlying_id;
  AssetRecord rec;
  rec.id = option_id;
  rec.name = "Call overlay on " + embedding.underlying_id;
  rec.firms = 0;
  rec.beta = embedding.beta_opt;
  rec.sigma = embedding.sigma_opt;

  std::vector<AssetRecord> assets = universe.assets();
  assets.push_back(rec);
  std::vector<double> beta = fc.beta();
  std::vector<double> resid = fc.resid_var();
  std::vector<ClipEvent> clips = fc.clip_events();
  const double raw = embedding.sigma_opt * embedding.sigma_opt - embedding.beta_opt * embedding.beta_opt * fc.var_m();
  if (raw < 0.0) clips.push_back({assets.size() - 1, option_id, -raw});
  beta.push_back(embedding.beta_opt);
  resid.push_back(std::max(0.0, raw));

  return {Universe(std::move(assets), universe.market(), universe.audit()),
          FactorCovariance(std::move(beta), fc.var_m(), std::move(resid), std::move(clips)), universe.size(),
          embedding.counts_toward_k, overlay_cap};
}

struct OptionGridRow {
  double moneyness = 1.0;  ///< K / S0
  double maturity = 0.0;
  double strike = 0.0;
  OptionDiagnostics diagnostics;
  OptionEmbedding embedding;
};

/// One row per (moneyness, maturity) pair, moneyness-major.
inline std::vector<OptionGridRow> option_grid(const OptionSpec& base, std::span<const double> moneyness,
                                              std::span<const double> maturities, const AssetRecord& underlying,
                                              const MarketParams& market) {
  if (moneyness.empty() || maturities.empty()) fail(ErrorKind::InvalidInput, "option grid requires nonempty axes");
  std::vector<OptionGridRow> rows;
  for (double m : moneyness) {
    for (double t : maturities) {
      OptionSpec spec = base;
      spec.strike = m * base.s0;
      spec.maturity = t;
      OptionGridRow row;
      row.moneyness = m;
      row.maturity = t;
      row.strike = spec.strike;
      row.diagnostics = bs_call_price(spec);
      row.embedding = embed_option(spec, underlying, market);
      rows.push_back(row);
    }
  }
  return rows;
}

struct BumpResult {
  double c0 = 0.0;
  double delta = 0.0;
  double c_repriced_up = 0.0;
  double c_repriced_dn = 0.0;
  double c_approx_up = 0.0;
  double c_approx_dn = 0.0;
  double relerr_up = 0.0;  ///< (C_approx - C_repriced) / C_repriced
  double relerr_dn = 0.0;
};

/// Delta-linearized vs full repricing under a relative spot move of +/-bump.
inline BumpResult bump_test(const OptionSpec& spec, double bump) {
  if (!(std::abs(bump) < 0.5)) fail(ErrorKind::InvalidInput, "bump must satisfy |bump| < 0.5");
  const auto base = bs_call_price(spec);
  BumpResult out;
  out.c0 = base.price;
  out.delta = base.delta;
  OptionSpec up = spec, dn = spec;
  up.s0 = spec.s0 * (1.0 + bump);
  dn.s0 = spec.s0 * (1.0 - bump);
  out.c_repriced_up = bs_call_price(up).price;
  out.c_repriced_dn = bs_call_price(dn).price;
  const double move = base.delta * bump * spec.s0;
  out.c_approx_up = out.c0 + move;
  out.c_approx_dn = out.c0 - move;
  if (bump == 0.0) return out;
  out.relerr_up = (out.c_approx_up - out.c_repriced_up) / out.c_repriced_up;
  out.relerr_dn = (out.c_approx_dn - out.c_repriced_dn) / out.c_repriced_dn;
  return out;
}

}  // namespace cardsel

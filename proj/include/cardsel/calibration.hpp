#pragma once

/**
 * @file calibration.hpp
 * @brief Calibrated asset universe and single-index covariance model.
 *
 * Expected returns follow CAPM:
 *
 *     mu_i = rf + beta_i * erp
 *
 * and the covariance follows the market model R_i = a_i + beta_i R_m + e_i:
 *
 *     Cov(i, j) = beta_i beta_j var_m                  (i != j)
 *     Var(i)    = beta_i^2 var_m + resid_i
 *     resid_i   = max(0, sigma_i^2 - beta_i^2 var_m)
 *
 * The factor form (beta, var_m, resid) is the source of truth. Quadratic forms
 * are evaluated in O(n) as (beta'w)^2 var_m + sum w_i^2 resid_i; the dense
 * matrix is only materialized for export and eigen-diagnostics.
 *
 * All rates and volatilities are annual decimals (0.0397, never 3.97).
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cardsel/csv.hpp"
#include "cardsel/error.hpp"

namespace cardsel {

struct AssetRecord {
  std::string id;
  std::string name;
  long firms = 0;
  double beta = 0.0;   ///< levered beta, dimensionless
  double sigma = 0.0;  ///< annual volatility, decimal
};

struct MarketParams {
  double rf = 0.0;
  double erp = 0.0;
  std::optional<double> sigma_m;  ///< required before any covariance is built

  void validate() const {
    if (!std::isfinite(rf)) fail(ErrorKind::InvalidInput, "rf must be finite");
    if (!(erp > 0.0) || !std::isfinite(erp)) fail(ErrorKind::InvalidInput, "erp must be > 0");
    if (sigma_m && (!(*sigma_m > 0.0) || !std::isfinite(*sigma_m)))
      fail(ErrorKind::InvalidInput, "sigma_m must be > 0");
  }

  double var_m() const {
    if (!sigma_m)
      fail(ErrorKind::InvalidInput,
           "sigma_m required: market volatility must be configured (--sigma-m) before building a covariance");
    return *sigma_m * *sigma_m;
  }
};

enum class Units { Decimal, Percent };

inline Units parse_units(std::string_view s) {
  if (s == "decimal") return Units::Decimal;
  if (s == "percent") return Units::Percent;
  fail(ErrorKind::InvalidInput, "units must be 'percent' or 'decimal', got '" + std::string(s) + "'");
}

inline std::string_view to_string(Units u) { return u == Units::Percent ? "percent" : "decimal"; }

/// Divides by 100 by shifting the decimal exponent of the shortest
/// round-trip text, so the result is bit-identical to parsing the
/// pre-divided decimal literal.
inline double percent_to_decimal(double x) {
  std::string s = format_double(x);
  if (!std::isfinite(x)) return x;
  if (const auto e = s.find('e'); e != std::string::npos) {
    const int exponent = std::stoi(s.substr(e + 1));
    s = s.substr(0, e) + "e" + std::to_string(exponent - 2);
  } else {
    s += "e-2";
  }
  return parse_double(s, "percent");
}

struct AuditEntry {
  enum class Level { Info, Warning };
  Level level = Level::Info;
  std::string message;
};

class Universe {
 public:
  Universe(std::vector<AssetRecord> assets, MarketParams market, std::vector<AuditEntry> audit = {})
      : assets_(std::move(assets)), market_(market), audit_(std::move(audit)) {
    market_.validate();
    if (assets_.empty()) fail(ErrorKind::InvalidInput, "universe must contain at least one asset");
    std::unordered_set<std::string> seen;
    for (const auto& a : assets_) {
      if (!seen.insert(a.id).second) fail(ErrorKind::InvalidInput, "duplicate asset id '" + a.id + "'");
      if (!(a.sigma > 0.0) || !std::isfinite(a.sigma))
        fail(ErrorKind::InvalidInput, "asset '" + a.id + "' has nonpositive sigma");
      if (!std::isfinite(a.beta)) fail(ErrorKind::InvalidInput, "asset '" + a.id + "' has non-finite beta");
      if (a.firms < 0) fail(ErrorKind::InvalidInput, "asset '" + a.id + "' has negative firm count");
    }
    mu_.reserve(assets_.size());
    for (const auto& a : assets_) mu_.push_back(market_.rf + a.beta * market_.erp);
  }

  std::size_t size() const { return assets_.size(); }
  const std::vector<AssetRecord>& assets() const { return assets_; }
  const AssetRecord& asset(std::size_t i) const { return assets_.at(i); }
  const std::vector<double>& mu() const { return mu_; }
  double mu(std::size_t i) const { return mu_[i]; }
  const MarketParams& market() const { return market_; }
  const std::vector<AuditEntry>& audit() const { return audit_; }

  std::vector<double> betas() const {
    std::vector<double> b;
    b.reserve(size());
    for (const auto& a : assets_) b.push_back(a.beta);
    return b;
  }

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < assets_.size(); ++i)
      if (assets_[i].id == id) return i;
    return std::nullopt;
  }

  /// Same assets, different market parameters; mu is rebuilt from CAPM.
  Universe with_market(const MarketParams& market) const { return Universe(assets_, market, audit_); }

 private:
  std::vector<AssetRecord> assets_;
  MarketParams market_;
  std::vector<double> mu_;
  std::vector<AuditEntry> audit_;
};

/// Builds a universe from a table with columns id,name,firms,beta,sigma
/// (matched by header name, in any order). In percent mode sigma and the
/// market rates are divided by 100; beta is dimensionless and untouched.
inline Universe ingest_universe(const CsvTable& table, MarketParams market, Units units) {
  static constexpr std::string_view kRequired[] = {"id", "name", "firms", "beta", "sigma"};
  std::vector<AuditEntry> audit;
  auto warn = [&](std::string msg) { audit.push_back({AuditEntry::Level::Warning, std::move(msg)}); };
  auto info = [&](std::string msg) { audit.push_back({AuditEntry::Level::Info, std::move(msg)}); };

  if (table.rows.empty()) fail(ErrorKind::InvalidInput, "input table has no data rows");
  std::size_t col[5];
  for (std::size_t k = 0; k < 5; ++k) {
    const auto c = table.column(kRequired[k]);
    if (!c) fail(ErrorKind::InvalidInput, "input table is missing required column '" + std::string(kRequired[k]) + "'");
    col[k] = *c;
  }
  for (const auto& h : table.header)
    if (std::find(std::begin(kRequired), std::end(kRequired), h) == std::end(kRequired))
      warn("ignoring unknown column '" + h + "'");

  info("units: input flagged " + std::string(to_string(units)));
  if (units == Units::Percent) {
    market.rf = percent_to_decimal(market.rf);
    market.erp = percent_to_decimal(market.erp);
    if (market.sigma_m) market.sigma_m = percent_to_decimal(*market.sigma_m);
    info("units: sigma, rf, erp" + std::string(market.sigma_m ? ", sigma_m" : "") +
         " converted percent -> decimal (/100); beta left dimensionless");
  }

  std::vector<AssetRecord> assets;
  assets.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    AssetRecord a;
    a.id = row[col[0]];
    a.name = row[col[1]];
    if (a.id.empty()) fail(ErrorKind::InvalidInput, "empty asset id in input table");
    const double firms = parse_double(row[col[2]], "firms");
    if (firms < 0 || firms != std::floor(firms))
      fail(ErrorKind::InvalidInput, "asset '" + a.id + "' firms must be a nonnegative integer");
    a.firms = static_cast<long>(firms);
    a.beta = parse_double(row[col[3]], "beta");
    a.sigma = parse_double(row[col[4]], "sigma");
    if (units == Units::Percent) a.sigma = percent_to_decimal(a.sigma);
    else if (a.sigma > 5.0)
      warn("asset '" + a.id + "' sigma=" + format_double(a.sigma) +
           " exceeds 5.0 under decimal units; likely a percent value");
    assets.push_back(std::move(a));
  }
  if (units == Units::Decimal) {
    if (market.rf > 5.0 || market.erp > 5.0 || (market.sigma_m && *market.sigma_m > 5.0))
      warn("market parameters exceed 5.0 under decimal units; likely percent values");
  }
  return Universe(std::move(assets), market, std::move(audit));
}

struct ClipEvent {
  std::size_t index;
  std::string id;
  double deficit;  ///< beta^2 var_m - sigma^2 (> 0), the variance that was clipped
};

class FactorCovariance {
 public:
  FactorCovariance(std::vector<double> beta, double var_m, std::vector<double> resid_var,
                   std::vector<ClipEvent> clips = {})
      : beta_(std::move(beta)), var_m_(var_m), resid_(std::move(resid_var)), clips_(std::move(clips)) {
    if (beta_.size() != resid_.size()) fail(ErrorKind::Internal, "factor covariance: beta/resid size mismatch");
    if (!(var_m_ > 0.0)) fail(ErrorKind::InvalidInput, "factor covariance: var_m must be > 0");
    for (double r : resid_)
      if (!(r >= 0.0)) fail(ErrorKind::InvalidInput, "factor covariance: residual variance must be >= 0");
  }

  std::size_t size() const { return beta_.size(); }
  const std::vector<double>& beta() const { return beta_; }
  double var_m() const { return var_m_; }
  const std::vector<double>& resid_var() const { return resid_; }
  const std::vector<ClipEvent>& clip_events() const { return clips_; }

  double variance(std::size_t i) const { return beta_[i] * beta_[i] * var_m_ + resid_[i]; }
  double covariance(std::size_t i, std::size_t j) const {
    return i == j ? variance(i) : beta_[i] * beta_[j] * var_m_;
  }

  /// w'Sigma w for a portfolio given on a support (indices, weights).
  double quadratic_form(std::span<const std::size_t> support, std::span<const double> w) const {
    double bw = 0.0, idio = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      const std::size_t i = support[k];
      bw += beta_[i] * w[k];
      idio += w[k] * w[k] * resid_[i];
    }
    return bw * bw * var_m_ + idio;
  }

  /// (Sigma w)_i for each support member, returned in support order.
  std::vector<double> times(std::span<const std::size_t> support, std::span<const double> w) const {
    double bw = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) bw += beta_[support[k]] * w[k];
    std::vector<double> out(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      const std::size_t i = support[k];
      out[k] = beta_[i] * bw * var_m_ + resid_[i] * w[k];
    }
    return out;
  }

 private:
  std::vector<double> beta_;
  double var_m_;
  std::vector<double> resid_;
  std::vector<ClipEvent> clips_;
};

/// Single-index covariance for a universe. Requires market.sigma_m.
/// Assets with sigma_i^2 < beta_i^2 var_m get zero residual variance and a
/// clip event (a warning, not an error).
inline FactorCovariance build_factor_covariance(const Universe& universe) {
  const double var_m = universe.market().var_m();
  std::vector<double> beta = universe.betas();
  std::vector<double> resid(universe.size());
  std::vector<ClipEvent> clips;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    const double s = universe.asset(i).sigma;
    const double raw = s * s - beta[i] * beta[i] * var_m;
    if (raw < 0.0) {
      clips.push_back({i, universe.asset(i).id, -raw});
      resid[i] = 0.0;
    } else {
      resid[i] = raw;
    }
  }
  return FactorCovariance(std::move(beta), var_m, std::move(resid), std::move(clips));
}

inline Eigen::MatrixXd materialize_dense(const FactorCovariance& fc) {
  const auto n = static_cast<Eigen::Index>(fc.size());
  const Eigen::Map<const Eigen::VectorXd> b(fc.beta().data(), n);
  Eigen::MatrixXd sigma = (b * b.transpose()) * fc.var_m();
  for (Eigen::Index i = 0; i < n; ++i) sigma(i, i) = fc.variance(static_cast<std::size_t>(i));
  // Off-diagonal products are commutative in IEEE arithmetic, so the result
  // is exactly symmetric.
  return sigma;
}

/// rho_ij = Sigma_ij / (sigma_i sigma_j), with rho_ii = 1 exactly.
inline Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& sigma,
                                                   std::span<const std::string> ids = {}) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n) fail(ErrorKind::InvalidInput, "covariance matrix must be square");
  Eigen::VectorXd sd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(sigma(i, i) > 0.0)) {
      const std::string who = static_cast<std::size_t>(i) < ids.size() ? "'" + ids[static_cast<std::size_t>(i)] + "'"
                                                                      : "index " + std::to_string(i);
      fail(ErrorKind::InvalidInput, "zero variance for asset " + who + "; correlation undefined");
    }
    sd(i) = std::sqrt(sigma(i, i));
  }
  Eigen::MatrixXd rho(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) rho(i, j) = i == j ? 1.0 : sigma(i, j) / (sd(i) * sd(j));
  return rho;
}

struct EpsilonPolicy {
  enum class Mode { Auto, Fixed };
  Mode mode = Mode::Auto;
  double epsilon = 0.0;  ///< used when mode == Fixed

  static EpsilonPolicy automatic() { return {}; }
  static EpsilonPolicy fixed(double eps) { return {Mode::Fixed, eps}; }
};

struct PsdGateResult {
  Eigen::MatrixXd matrix;
  double min_eig_before = 0.0;
  double min_eig_after = 0.0;
  double jitter = 0.0;  ///< epsilon added to the diagonal (0 when untouched)
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kPsdHardFailure = 1e-6;

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::Internal, "eigen-decomposition failed");
  return es.eigenvalues().minCoeff();
}

/// Accepts a symmetric matrix whose smallest eigenvalue is >= -1e-10 as is
/// (bit-identical output). Between -1e-6 and -1e-10 a diagonal jitter eps*I is
/// added and recorded; below -1e-6 the matrix is rejected as a construction
/// error rather than roundoff.
inline PsdGateResult psd_gate(const Eigen::MatrixXd& sigma, EpsilonPolicy policy = EpsilonPolicy::automatic()) {
  if (sigma.rows() != sigma.cols()) fail(ErrorKind::InvalidInput, "psd_gate: matrix must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 0.0)
    fail(ErrorKind::InvalidInput, "psd_gate: matrix must be symmetric");
  PsdGateResult out;
  out.min_eig_before = min_eigenvalue(sigma);
  out.matrix = sigma;
  out.min_eig_after = out.min_eig_before;
  if (out.min_eig_before >= -kPsdTolerance) return out;
  if (out.min_eig_before < -kPsdHardFailure)
    fail(ErrorKind::Internal, "psd_gate: min eigenvalue " + format_double(out.min_eig_before) +
                                  " below -1e-6 indicates a construction error, not roundoff");
  out.jitter = policy.mode == EpsilonPolicy::Mode::Fixed ? policy.epsilon : -out.min_eig_before;
  out.matrix.diagonal().array() += out.jitter;
  out.min_eig_after = min_eigenvalue(out.matrix);
  if (out.min_eig_after < -kPsdTolerance)
    fail(ErrorKind::InvalidInput, "psd_gate: jitter " + format_double(out.jitter) +
                                      " insufficient; min eigenvalue still " + format_double(out.min_eig_after));
  return out;
}

/// Restriction of a universe and its factor model to `indices` (in the given
/// order). Used for reduced benchmark instances and for dropping an overlay.
struct SubUniverse {
  Universe universe;
  FactorCovariance fc;
};

inline SubUniverse restrict_to(const Universe& universe, const FactorCovariance& fc,
                               std::span<const std::size_t> indices) {
  std::vector<AssetRecord> assets;
  std::vector<double> beta, resid;
  std::vector<ClipEvent> clips;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= universe.size()) fail(ErrorKind::InvalidInput, "restrict_to: index out of range");
    assets.push_back(universe.asset(i));
    beta.push_back(fc.beta()[i]);
    resid.push_back(fc.resid_var()[i]);
    for (const auto& c : fc.clip_events())
      if (c.index == i) clips.push_back({k, c.id, c.deficit});
  }
  return {Universe(std::move(assets), universe.market(), universe.audit()),
          FactorCovariance(std::move(beta), fc.var_m(), std::move(resid), std::move(clips))};
}

}  // namespace cardsel

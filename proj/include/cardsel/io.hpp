#pragma once

/**
 * @file io.hpp
 * @brief Configuration, JSON records, delimited tables and the hashed
 *        artifact bundle.
 *
 * Numeric files carry decimal units in shortest round-trip form, so every value
 * parses back exactly; rounding only happens in human-facing summaries.
 */

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardsel/calibration.hpp"
#include "cardsel/csv.hpp"
#include "cardsel/derivatives.hpp"
#include "cardsel/diagnostics.hpp"
#include "cardsel/error.hpp"
#include "cardsel/experiments.hpp"
#include "cardsel/metrics.hpp"
#include "cardsel/solvers.hpp"

namespace cardsel {

inline constexpr const char* kToolkitVersion = "cardsel 1.0.0";

using json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the identical double, so no
/// precision is ever lost (0.9 stays "0.9", 1/3 gets all 16-17 digits).
inline std::string format_full(double x) { return format_double(x); }

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::string_view to_string(SharpeStatus s) {
  switch (s) {
    case SharpeStatus::Finite: return "finite";
    case SharpeStatus::RisklessAbove: return "riskless_above_rf";
    case SharpeStatus::RisklessBelow: return "riskless_below_rf";
    case SharpeStatus::RisklessFlat: return "riskless_at_rf";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  MarketParams market{0.0397, 0.0423, std::nullopt};
  std::string data_path;  ///< empty: synthetic universe
  Units units = Units::Decimal;
  std::size_t synthetic_n = 20;
  std::uint64_t synthetic_seed = 1;
  Method method = Method::MonteCarlo;
  SolverConfig solver;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
};

inline json constraints_to_json(const ConstraintSet& c) {
  json j;
  j["k"] = c.k;
  j["cap"] = c.weight_cap ? json(*c.weight_cap) : json(nullptr);
  if (!c.asset_caps.empty()) j["asset_caps"] = c.asset_caps;
  j["beta_band"] = c.beta_band ? json::array({c.beta_band->first, c.beta_band->second}) : json(nullptr);
  j["min_return"] = c.min_return ? json(*c.min_return) : json(nullptr);
  if (c.overlay) j["overlay"] = {{"index", c.overlay->index}, {"cap", c.overlay->cap}};
  return j;
}

inline json solver_config_to_json(const SolverConfig& s) {
  json j;
  j["seed"] = s.seed;
  j["draws"] = s.draws;
  j["pop"] = s.population;
  j["gens"] = s.generations;
  j["reopt_budget"] = s.reopt_budget;
  j["weighting"] = to_string(s.weighting);
  j["objective"] = to_string(s.objective);
  j["lambda"] = s.lambda;
  j["score"] = to_string(s.greedy_score);
  j["polish"] = s.polish_best;
  j["checkpoint_every"] = s.checkpoint_every;
  j["max_cap_retries"] = s.max_cap_retries;
  j["enumeration_ceiling"] = s.enumeration_ceiling;
  j["constraints"] = constraints_to_json(s.constraints);
  j["reopt_schedule"] = {{"stages", s.schedule.stages},
                         {"growth", s.schedule.concentration_growth},
                         {"alpha_floor", s.schedule.alpha_floor}};
  return j;
}

inline json market_to_json(const MarketParams& m) {
  return {{"rf", m.rf}, {"erp", m.erp}, {"sigma_m", m.sigma_m ? json(*m.sigma_m) : json(nullptr)}};
}

inline json save_config(const RunConfig& c) {
  json j;
  j["market"] = market_to_json(c.market);
  j["data_path"] = c.data_path;
  j["units"] = to_string(c.units);
  j["synthetic"] = {{"n", c.synthetic_n}, {"seed", c.synthetic_seed}};
  j["method"] = to_string(c.method);
  j["solver"] = solver_config_to_json(c.solver);
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  return j;
}

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "config: '" + std::string(where) + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(ErrorKind::InvalidInput, "config: unknown key '" + key + "' in " + std::string(where));
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline ConstraintSet constraints_from_json(const json& j) {
  detail::reject_unknown(j, {"k", "cap", "asset_caps", "beta_band", "min_return", "overlay"}, "constraints");
  ConstraintSet c;
  detail::read_opt(j, "k", c.k);
  if (j.contains("cap") && !j["cap"].is_null()) c.weight_cap = j["cap"].get<double>();
  detail::read_opt(j, "asset_caps", c.asset_caps);
  if (j.contains("beta_band") && !j["beta_band"].is_null()) {
    const auto& b = j["beta_band"];
    if (!b.is_array() || b.size() != 2) fail(ErrorKind::InvalidInput, "config: beta_band must be [lo, hi]");
    c.beta_band = std::pair{b[0].get<double>(), b[1].get<double>()};
  }
  if (j.contains("min_return") && !j["min_return"].is_null()) c.min_return = j["min_return"].get<double>();
  if (j.contains("overlay")) {
    detail::reject_unknown(j["overlay"], {"index", "cap"}, "overlay");
    c.overlay = Overlay{j["overlay"].at("index").get<std::size_t>(), j["overlay"].at("cap").get<double>()};
  }
  return c;
}

inline SolverConfig solver_config_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"seed", "draws", "pop", "gens", "reopt_budget", "weighting", "objective", "lambda", "score",
                          "polish", "checkpoint_every", "max_cap_retries", "enumeration_ceiling", "constraints",
                          "reopt_schedule"},
                         "solver");
  SolverConfig s;
  detail::read_opt(j, "seed", s.seed);
  detail::read_opt(j, "draws", s.draws);
  detail::read_opt(j, "pop", s.population);
  detail::read_opt(j, "gens", s.generations);
  detail::read_opt(j, "reopt_budget", s.reopt_budget);
  if (j.contains("weighting")) s.weighting = parse_weighting(j["weighting"].get<std::string>());
  if (j.contains("objective")) s.objective = parse_objective(j["objective"].get<std::string>());
  detail::read_opt(j, "lambda", s.lambda);
  if (j.contains("score")) s.greedy_score = parse_greedy_score(j["score"].get<std::string>());
  detail::read_opt(j, "polish", s.polish_best);
  detail::read_opt(j, "checkpoint_every", s.checkpoint_every);
  detail::read_opt(j, "max_cap_retries", s.max_cap_retries);
  detail::read_opt(j, "enumeration_ceiling", s.enumeration_ceiling);
  if (j.contains("constraints")) s.constraints = constraints_from_json(j["constraints"]);
  if (j.contains("reopt_schedule")) {
    const auto& r = j["reopt_schedule"];
    detail::reject_unknown(r, {"stages", "growth", "alpha_floor"}, "reopt_schedule");
    detail::read_opt(r, "stages", s.schedule.stages);
    detail::read_opt(r, "growth", s.schedule.concentration_growth);
    detail::read_opt(r, "alpha_floor", s.schedule.alpha_floor);
  }
  return s;
}

/// Strict parse: any unknown key is an error, so typos never fall back to
/// defaults silently.
inline RunConfig config_from_json(const json& j) {
  detail::reject_unknown(j, {"market", "data_path", "units", "synthetic", "method", "solver", "seeds", "output_dir"},
                         "top level");
  RunConfig c;
  try {
    if (j.contains("market")) {
      const auto& m = j["market"];
      detail::reject_unknown(m, {"rf", "erp", "sigma_m"}, "market");
      detail::read_opt(m, "rf", c.market.rf);
      detail::read_opt(m, "erp", c.market.erp);
      if (m.contains("sigma_m") && !m["sigma_m"].is_null()) c.market.sigma_m = m["sigma_m"].get<double>();
    }
    detail::read_opt(j, "data_path", c.data_path);
    if (j.contains("units")) c.units = parse_units(j["units"].get<std::string>());
    if (j.contains("synthetic")) {
      detail::reject_unknown(j["synthetic"], {"n", "seed"}, "synthetic");
      detail::read_opt(j["synthetic"], "n", c.synthetic_n);
      detail::read_opt(j["synthetic"], "seed", c.synthetic_seed);
    }
    if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
    if (j.contains("solver")) c.solver = solver_config_from_json(j["solver"]);
    detail::read_opt(j, "seeds", c.seeds);
    detail::read_opt(j, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("config: ") + e.what());
  }
  c.market.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Io, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Records

inline json portfolio_to_json(const Portfolio& p, const Universe& u) {
  json ids = json::array();
  for (auto i : p.support) ids.push_back(u.asset(i).id);
  return {{"support", p.support}, {"ids", ids}, {"weights", p.weights}};
}

inline json evaluation_to_json(const std::string& portfolio_id, const Portfolio& p, const Universe& u,
                               const FactorCovariance& fc) {
  const auto e = evaluate(p, u, fc);
  json j;
  j["portfolio_id"] = portfolio_id;
  j["mu_p"] = e.mu_p;
  j["sigma_p"] = e.sigma_p;
  j["sharpe"] = number_or_null(e.sharpe);
  j["sharpe_status"] = to_string(e.status);
  j["beta_p"] = e.beta_p;
  j["risk_contributions"] = e.variance > 0.0 ? json(risk_contributions(p, fc)) : json::array();
  return j;
}

struct RunJsonOptions {
  bool include_timing = true;  ///< wall_time is the only nondeterministic field
  bool include_log = false;
};

inline json run_to_json(const SolverRun& run, const Universe& u, RunJsonOptions opt = {}) {
  json j;
  j["toolkit_version"] = kToolkitVersion;
  j["method"] = to_string(run.method);
  j["market"] = market_to_json(u.market());
  j["n"] = u.size();
  j["config"] = solver_config_to_json(run.config);
  j["best"] = portfolio_to_json(run.best, u);
  j["best"]["mu_p"] = run.best_eval.mu_p;
  j["best"]["sigma_p"] = run.best_eval.sigma_p;
  j["best"]["sharpe"] = number_or_null(run.best_eval.sharpe);
  j["best"]["sharpe_status"] = to_string(run.best_eval.status);
  j["best"]["beta_p"] = run.best_eval.beta_p;
  j["best_fitness"] = number_or_null(run.best_fitness);
  j["evaluations"] = run.evaluations;
  j["inner_evaluations"] = run.inner_evaluations;
  j["skipped"] = run.skipped;
  j["infeasible"] = run.infeasible;
  j["subsets_visited"] = run.subsets_visited;
  json curve = json::array();
  for (const auto& c : run.running_best) curve.push_back({c.evaluations, number_or_null(c.best_fitness)});
  j["running_best"] = curve;
  const auto pop = summarize(run.sharpes());
  j["population"] = {{"count", pop.count}, {"median", pop.median}, {"iqr", pop.iqr()}, {"q05", pop.q05},
                     {"q95", pop.q95},     {"max", pop.max}};
  j["metadata"] = run.metadata;
  if (opt.include_log) {
    json log = json::array();
    for (const auto& r : run.log) log.push_back({r.mu_p, r.sigma_p, number_or_null(r.sharpe)});
    j["log"] = log;
  }
  if (opt.include_timing) j["wall_time"] = run.wall_time;
  return j;
}

inline json summary_to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean},     {"std", s.std},   {"min", s.min},
          {"q05", s.q05},     {"q25", s.q25},       {"median", s.median}, {"q75", s.q75},
          {"q95", s.q95},     {"max", s.max},       {"iqr", s.iqr()}};
}

inline json distribution_to_json(const RunDistribution& d, bool include_timing = true) {
  json j;
  j["toolkit_version"] = kToolkitVersion;
  j["method"] = to_string(d.method);
  j["config"] = solver_config_to_json(d.config);
  j["seeds"] = d.seeds;
  json per = json::array();
  for (const auto& r : d.per_seed) {
    json x = {{"seed", r.seed},
              {"best_sharpe", number_or_null(r.best_sharpe)},
              {"best_support", r.best_support},
              {"best_weights", r.best_weights},
              {"best_mu", r.best_mu},
              {"best_sigma", r.best_sigma},
              {"population", summary_to_json(r.population)},
              {"evaluations", r.evaluations},
              {"skipped", r.skipped},
              {"infeasible", r.infeasible}};
    if (include_timing) x["wall_time"] = r.wall_time;
    per.push_back(x);
  }
  j["per_seed"] = per;
  j["best"] = summary_to_json(d.best);
  j["run_median"] = summary_to_json(d.run_median);
  j["pooled"] = summary_to_json(d.pooled);
  if (include_timing) j["runtime"] = summary_to_json(d.runtime);
  j["best_support"] = d.best_support;
  j["best_sharpe"] = number_or_null(d.best_sharpe);
  return j;
}

inline json dependence_to_json(const DependenceReport& r) {
  json shares = json::object();
  for (const auto& [t, s] : r.share_above) shares[format_double(t)] = s;
  return {{"n", r.n},
          {"median_offdiag_rho", r.median_offdiag_rho},
          {"share_above", shares},
          {"share_negative", r.share_negative},
          {"eig_share_top1", r.eig_share_top1},
          {"eig_share_top5", r.eig_share_top5},
          {"min_eig", r.min_eig},
          {"condition_proxy", number_or_null(r.condition_proxy)},
          {"positive_eig_tolerance", r.positive_eig_tolerance},
          {"trace", r.trace}};
}

inline json environment_to_json(const EnvironmentInfo& e) {
  return {{"cpu", e.cpu}, {"cores", e.cores}, {"os", e.os}, {"compiler", e.compiler}};
}

// ---------------------------------------------------------------------------
// Delimited tables

inline std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& ids) {
  std::ostringstream out;
  out << "id";
  for (const auto& id : ids) out << ',' << csv_escape(id);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << csv_escape(ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_full(m(i, j));
    out << '\n';
  }
  return out.str();
}

inline std::vector<std::string> asset_ids(const Universe& u) {
  std::vector<std::string> ids;
  for (const auto& a : u.assets()) ids.push_back(a.id);
  return ids;
}

/// Calibrated inputs: the raw columns plus CAPM mu and residual variance.
inline std::string inputs_csv(const Universe& u, const FactorCovariance* fc = nullptr) {
  std::ostringstream out;
  out << "id,name,firms,beta,sigma,mu" << (fc ? ",resid_var" : "") << '\n';
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& a = u.asset(i);
    out << csv_escape(a.id) << ',' << csv_escape(a.name) << ',' << a.firms << ',' << format_full(a.beta) << ','
        << format_full(a.sigma) << ',' << format_full(u.mu(i));
    if (fc) out << ',' << format_full(fc->resid_var()[i]);
    out << '\n';
  }
  return out.str();
}

inline std::string curve_csv(const SolverRun& run) {
  std::ostringstream out;
  out << "evaluations,best_fitness\n";
  for (const auto& c : run.running_best) out << c.evaluations << ',' << format_full(c.best_fitness) << '\n';
  return out.str();
}

/// Column order: K/S0, T, K, C, Delta, L, beta_opt, sigma_opt, mu_opt.
inline std::string option_grid_csv(const std::vector<OptionGridRow>& rows) {
  std::ostringstream out;
  out << "moneyness,maturity,strike,price,delta,leverage,beta_opt,sigma_opt,mu_opt\n";
  for (const auto& r : rows)
    out << format_full(r.moneyness) << ',' << format_full(r.maturity) << ',' << format_full(r.strike) << ','
        << format_full(r.diagnostics.price) << ',' << format_full(r.diagnostics.delta) << ','
        << format_full(r.diagnostics.leverage) << ',' << format_full(r.embedding.beta_opt) << ','
        << format_full(r.embedding.sigma_opt) << ',' << format_full(r.embedding.mu_opt) << '\n';
  return out.str();
}

struct BumpRow {
  double moneyness;
  double maturity;
  BumpResult result;
};

/// Column order: K/S0, T, C0, Delta, C_up, RelErr_up, C_dn, RelErr_dn.
inline std::string bump_csv(const std::vector<BumpRow>& rows) {
  std::ostringstream out;
  out << "moneyness,maturity,c0,delta,c_up,relerr_up,c_dn,relerr_dn\n";
  for (const auto& r : rows)
    out << format_full(r.moneyness) << ',' << format_full(r.maturity) << ',' << format_full(r.result.c0) << ','
        << format_full(r.result.delta) << ',' << format_full(r.result.c_repriced_up) << ','
        << format_full(r.result.relerr_up) << ',' << format_full(r.result.c_repriced_dn) << ','
        << format_full(r.result.relerr_dn) << '\n';
  return out.str();
}

/// Campaign table: method, runs, portfolios/run, population median/IQR/Q05/Q95, best, median mu/sigma.
inline std::string campaign_csv(const std::vector<RunDistribution>& ds) {
  std::ostringstream out;
  out << "method,runs,evaluations_per_run,median_sharpe,iqr,q05,q95,best_sharpe,best_mean,best_std,runtime_mean,runtime_std\n";
  for (const auto& d : ds) {
    const double evals = d.per_seed.empty() ? 0.0 : static_cast<double>(d.per_seed.front().evaluations);
    out << to_string(d.method) << ',' << d.per_seed.size() << ',' << format_full(evals) << ','
        << format_full(d.pooled.median) << ',' << format_full(d.pooled.iqr()) << ',' << format_full(d.pooled.q05) << ','
        << format_full(d.pooled.q95) << ',' << format_full(d.best_sharpe) << ',' << format_full(d.best.mean) << ','
        << format_full(d.best.std) << ',' << format_full(d.runtime.mean) << ',' << format_full(d.runtime.std) << '\n';
  }
  return out.str();
}

/// Effort grid: method, budget, best mean/std, median mean/std, runtime mean/std.
inline std::string effort_csv(Method method, const std::vector<EffortRow>& rows) {
  std::ostringstream out;
  out << "method,budget,best_mean,best_std,median_mean,median_std,runtime_mean,runtime_std\n";
  for (const auto& r : rows) {
    const auto& d = r.distribution;
    out << to_string(method) << ',' << csv_escape(r.label) << ',' << format_full(d.best.mean) << ','
        << format_full(d.best.std) << ',' << format_full(d.run_median.mean) << ',' << format_full(d.run_median.std)
        << ',' << format_full(d.runtime.mean) << ',' << format_full(d.runtime.std) << '\n';
  }
  return out.str();
}

/// Sensitivity table: scenario, median, IQR bounds, mean best.
inline std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "scenario,median_sharpe,q25,q75,best_mean\n";
  for (const auto& sc : s.scenarios) {
    const auto& d = *sc.result;
    out << csv_escape(sc.name) << ',' << format_full(d.pooled.median) << ',' << format_full(d.pooled.q25) << ','
        << format_full(d.pooled.q75) << ',' << format_full(d.best.mean) << '\n';
  }
  return out.str();
}

inline std::string support_tuple(const std::vector<std::size_t>& s) {
  std::string t = "(";
  for (std::size_t i = 0; i < s.size(); ++i) t += (i ? ", " : "") + std::to_string(s[i]);
  return t + ")";
}

/// Benchmark table: method, best Sharpe, gap %, best subset.
inline std::string benchmark_csv(const BenchmarkResult& b) {
  std::ostringstream out;
  out << "method,best_sharpe,gap_pct,best_subset\n";
  out << "exact," << format_full(b.exact_sharpe) << ",0," << csv_escape(support_tuple(b.exact_support)) << '\n';
  for (const auto& r : b.rows)
    out << csv_escape(r.label) << ',' << format_full(r.sharpe) << ',' << format_full(r.gap_pct) << ','
        << csv_escape(support_tuple(r.support)) << '\n';
  return out.str();
}

inline std::string profile_csv(const RuntimeProfile& p) {
  std::ostringstream out;
  out << "method,runs,evaluations_per_run,runtime_mean,runtime_std,best_mean\n";
  for (const auto& r : p.rows) {
    const auto& d = r.distribution;
    out << csv_escape(r.label) << ',' << d.per_seed.size() << ','
        << (d.per_seed.empty() ? 0 : d.per_seed.front().evaluations) << ',' << format_full(d.runtime.mean) << ','
        << format_full(d.runtime.std) << ',' << format_full(d.best.mean) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Artifact bundle

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Internal, "SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

struct ManifestEntry {
  std::string path;  ///< relative to the bundle directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct Manifest {
  std::vector<ManifestEntry> files;

  json to_json() const {
    json files_j = json::array();
    for (const auto& f : files) files_j.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return {{"toolkit_version", kToolkitVersion}, {"hash", "sha256"}, {"files", files_j}};
  }
};

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

/// Collects named files and writes them plus manifest.json (path, SHA-256,
/// size per file) into one directory.
class ArtifactBundle {
 public:
  void add(std::string name, std::string content) { files_[std::move(name)] = std::move(content); }
  void add_json(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }

  /// Sigma.csv, rho.csv and inputs.csv for a calibrated universe.
  void add_calibration(const Universe& u, const FactorCovariance& fc) {
    const auto ids = asset_ids(u);
    const Eigen::MatrixXd sigma = materialize_dense(fc);
    add("Sigma.csv", matrix_csv(sigma, ids));
    add("rho.csv", matrix_csv(correlation_from_covariance(sigma, ids), ids));
    add("inputs.csv", inputs_csv(u, &fc));
  }

  void add_run(const std::string& name, const SolverRun& run, const Universe& u) {
    add_json("run_" + name + ".json", run_to_json(run, u));
    add("curve_" + name + ".csv", curve_csv(run));
  }

  Manifest write(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
      fail(ErrorKind::Io, "cannot create output directory '" + dir.string() + "'");
    Manifest m;
    for (const auto& [name, content] : files_) {
      write_text_file(dir / name, content);
      m.files.push_back({name, sha256_hex(content), content.size()});
    }
    write_text_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
    return m;
  }

  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::map<std::string, std::string> files_;
};

/// Re-hashes the files listed in a manifest; returns the paths whose content
/// no longer matches.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const json m = json::parse(read_text_file((dir / "manifest.json").string()));
  std::vector<std::string> changed;
  for (const auto& f : m.at("files")) {
    const auto path = f.at("path").get<std::string>();
    if (sha256_hex(read_text_file((dir / path).string())) != f.at("sha256").get<std::string>()) changed.push_back(path);
  }
  return changed;
}

inline Manifest export_artifacts(const Universe& u, const FactorCovariance& fc,
                                 const std::vector<std::pair<std::string, SolverRun>>& runs,
                                 const std::filesystem::path& dir, const std::optional<RunConfig>& config = std::nullopt) {
  ArtifactBundle bundle;
  bundle.add_calibration(u, fc);
  for (const auto& [name, run] : runs) bundle.add_run(name, run, u);
  if (config) bundle.add_json("config.json", save_config(*config));
  return bundle.write(dir);
}

}  // namespace cardsel

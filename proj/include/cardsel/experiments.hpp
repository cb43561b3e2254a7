#pragma once

/**
 * @file experiments.hpp
 * @brief Seeded multi-run campaigns and the reports built on them: effort
 *        grids, exact-vs-heuristic gaps, sensitivity sweeps, runtime profiles.
 *
 * Per-seed runs may execute on a worker pool; results are keyed by seed and
 * assembled in ascending seed order, so statistics do not depend on the
 * order of the seed list or on scheduling.
 *
 * Timing wraps the solver call only (monotonic clock), never I/O or
 * calibration.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/utsname.h>
#endif

#include "cardsel/calibration.hpp"
#include "cardsel/diagnostics.hpp"
#include "cardsel/error.hpp"
#include "cardsel/metrics.hpp"
#include "cardsel/rng.hpp"
#include "cardsel/solvers.hpp"
#include "cardsel/stats.hpp"

namespace cardsel {

struct SeedRecord {
  std::uint64_t seed = 0;
  double best_sharpe = 0.0;
  double best_fitness = 0.0;
  std::vector<std::size_t> best_support;
  std::vector<double> best_weights;
  double best_mu = 0.0;
  double best_sigma = 0.0;
  Summary population;  ///< Sharpe distribution of every portfolio this run scored
  std::uint64_t evaluations = 0;
  std::uint64_t skipped = 0;
  std::uint64_t infeasible = 0;
  double wall_time = 0.0;
};

struct RunDistribution {
  Method method = Method::MonteCarlo;
  SolverConfig config;  ///< base config; seed overridden per run
  std::vector<std::uint64_t> seeds;
  std::vector<SeedRecord> per_seed;  ///< ascending seed order
  Summary best;                      ///< over per-run best Sharpe
  Summary run_median;                ///< over per-run population medians
  Summary pooled;                    ///< over all scored portfolios of all runs
  Summary runtime;                   ///< wall time, seconds
  std::vector<std::size_t> best_support;  ///< support of the overall best run
  double best_sharpe = 0.0;

  // Shorthand for the headline statistics of the per-run best.
  double median() const { return best.median; }
  double iqr() const { return best.iqr(); }
  double q05() const { return best.q05; }
  double q95() const { return best.q95; }
};

namespace detail {

inline SeedRecord record_of(const SolverRun& run) {
  SeedRecord r;
  r.seed = run.config.seed;
  r.best_sharpe = run.best_eval.sharpe;
  r.best_fitness = run.best_fitness;
  r.best_support = run.best.support;
  r.best_weights = run.best.weights;
  r.best_mu = run.best_eval.mu_p;
  r.best_sigma = run.best_eval.sigma_p;
  const auto s = run.sharpes();
  r.population = summarize(s);
  r.evaluations = run.evaluations;
  r.skipped = run.skipped;
  r.infeasible = run.infeasible;
  r.wall_time = run.wall_time;
  return r;
}

}  // namespace detail

/// Recomputes every distribution-level statistic from the stored per-seed
/// records (plus the pooled population when supplied).
inline void finalize_distribution(RunDistribution& d, std::optional<std::vector<double>> pooled_sharpes = std::nullopt) {
  std::sort(d.per_seed.begin(), d.per_seed.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  d.seeds.clear();
  std::vector<double> best, medians, runtime;
  for (const auto& r : d.per_seed) {
    d.seeds.push_back(r.seed);
    best.push_back(r.best_sharpe);
    medians.push_back(r.population.median);
    runtime.push_back(r.wall_time);
  }
  d.best = summarize(best);
  d.run_median = summarize(medians);
  d.runtime = summarize(runtime);
  if (pooled_sharpes) d.pooled = summarize(*pooled_sharpes);
  if (!d.per_seed.empty()) {
    const auto it = std::max_element(d.per_seed.begin(), d.per_seed.end(),
                                     [](const auto& a, const auto& b) { return a.best_fitness < b.best_fitness; });
    d.best_support = it->best_support;
    d.best_sharpe = it->best_sharpe;
  }
}

/**
 * One SolverRun per seed with `base` otherwise unchanged. A failing seed
 * aborts the campaign with the seed named in the error. `threads` > 1
 * dispatches seeds to a worker pool (runtimes then include contention).
 */
inline RunDistribution run_campaign(Method method, const Universe& universe, const FactorCovariance& fc,
                                    const SolverConfig& base, std::vector<std::uint64_t> seeds, unsigned threads = 1) {
  if (seeds.empty()) fail(ErrorKind::InvalidInput, "campaign needs at least one seed");
  {
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size()) fail(ErrorKind::InvalidInput, "campaign seeds must be distinct");
  }
  std::sort(seeds.begin(), seeds.end());

  std::vector<std::optional<SeedRecord>> records(seeds.size());
  std::vector<std::vector<double>> populations(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<Error> first_error;
  std::optional<std::uint64_t> failed_seed;

  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= seeds.size()) return;
      SolverConfig cfg = base;
      cfg.seed = seeds[slot];
      try {
        const SolverRun run = solve(method, universe, fc, cfg);
        records[slot] = detail::record_of(run);
        populations[slot] = run.sharpes();
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!failed_seed || seeds[slot] < *failed_seed) {
          failed_seed = seeds[slot];
          first_error = e;
        }
      }
    }
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& t : workers) t.join();
  }
  if (first_error)
    throw Error(first_error->kind(), "campaign aborted at seed " + std::to_string(*failed_seed) + ": " + first_error->what());

  RunDistribution d;
  d.method = method;
  d.config = base;
  std::vector<double> pooled;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    d.per_seed.push_back(std::move(*records[i]));
    pooled.insert(pooled.end(), populations[i].begin(), populations[i].end());
  }
  finalize_distribution(d, std::move(pooled));
  return d;
}

/// Effort budget for one grid row: draws for MC, (population, generations) for GA.
struct Budget {
  std::size_t draws = 0;
  std::size_t population = 0;
  std::size_t generations = 0;

  std::uint64_t nominal(Method m) const {
    return m == Method::Genetic ? static_cast<std::uint64_t>(population) * generations : draws;
  }
  std::string label(Method m) const {
    return m == Method::Genetic ? "P=" + std::to_string(population) + ", G=" + std::to_string(generations)
                                : "N=" + std::to_string(draws);
  }
  SolverConfig apply(SolverConfig cfg) const {
    if (draws) cfg.draws = draws;
    if (population) cfg.population = population;
    if (generations) cfg.generations = generations;
    return cfg;
  }
};

struct EffortRow {
  Budget budget;
  std::string label;
  RunDistribution distribution;
};

inline std::vector<EffortRow> effort_grid(Method method, const Universe& universe, const FactorCovariance& fc,
                                          const SolverConfig& base, const std::vector<Budget>& budgets,
                                          const std::vector<std::uint64_t>& seeds, unsigned threads = 1) {
  if (budgets.empty()) fail(ErrorKind::InvalidInput, "effort grid needs at least one budget");
  for (std::size_t i = 1; i < budgets.size(); ++i)
    if (budgets[i].nominal(method) <= budgets[i - 1].nominal(method))
      fail(ErrorKind::InvalidInput, "effort budgets must be strictly increasing");
  std::vector<EffortRow> rows;
  for (const auto& b : budgets)
    rows.push_back({b, b.label(method), run_campaign(method, universe, fc, b.apply(base), seeds, threads)});
  return rows;
}

/// Fit of log(mean runtime) on log(nominal budget).
inline LinearFit runtime_scaling(const std::vector<EffortRow>& rows, Method method) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(std::log(static_cast<double>(r.budget.nominal(method))));
    y.push_back(std::log(r.distribution.runtime.mean));
  }
  return least_squares(x, y);
}

struct HeuristicSpec {
  std::string label;
  Method method = Method::MonteCarlo;
  SolverConfig config;
};

struct BenchmarkRow {
  std::string label;
  Method method = Method::MonteCarlo;
  double sharpe = 0.0;
  std::vector<std::size_t> support;
  double gap_pct = 0.0;  ///< 100 (exact - method) / exact
  std::uint64_t evaluations = 0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

struct BenchmarkResult {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t subsets_visited = 0;
  double exact_sharpe = 0.0;
  std::vector<std::size_t> exact_support;
  double exact_wall_time = 0.0;
  std::vector<BenchmarkRow> rows;
};

inline double optimality_gap_pct(double exact, double heuristic) { return 100.0 * (exact - heuristic) / exact; }

/// Reduced instance = first `n` assets in input order; exact enumeration with
/// `exact_config` weighting is the ground truth for every heuristic.
inline BenchmarkResult exact_benchmark(const Universe& universe, const FactorCovariance& fc, std::size_t n,
                                       std::size_t k, SolverConfig exact_config,
                                       const std::vector<HeuristicSpec>& heuristics) {
  if (n < 1 || n > universe.size())
    fail(ErrorKind::InvalidInput, "reduced instance size n=" + std::to_string(n) + " must lie in [1, " +
                                      std::to_string(universe.size()) + "]");
  std::vector<std::size_t> first(n);
  std::iota(first.begin(), first.end(), std::size_t{0});
  const auto reduced = restrict_to(universe, fc, first);

  exact_config.constraints.k = k;
  const auto exact = exact_enumerate(reduced.universe, reduced.fc, exact_config);
  BenchmarkResult out;
  out.n = n;
  out.k = k;
  out.subsets_visited = exact.subsets_visited;
  out.exact_sharpe = exact.best_eval.sharpe;
  out.exact_support = exact.best.support;
  out.exact_wall_time = exact.wall_time;
  for (const auto& h : heuristics) {
    SolverConfig cfg = h.config;
    cfg.constraints.k = k;
    const auto run = solve(h.method, reduced.universe, reduced.fc, cfg);
    out.rows.push_back({h.label, h.method, run.best_eval.sharpe, run.best.support,
                        optimality_gap_pct(out.exact_sharpe, run.best_eval.sharpe), run.evaluations, run.wall_time,
                        cfg.seed});
  }
  return out;
}

struct ScenarioOverrides {
  std::optional<std::size_t> k;
  std::optional<double> rf_shift;
  std::optional<double> erp_shift;
  std::optional<double> erp_scale;
  std::optional<double> cap;
};

struct SensitivityScenario {
  std::string name;
  ScenarioOverrides overrides;
  std::optional<RunDistribution> result;
};

struct SweepResult {
  std::vector<SensitivityScenario> scenarios;
  std::vector<std::vector<double>> overlap;  ///< Jaccard of best supports, scenario x scenario
};

/// Market shifts rebuild mu from CAPM on a copy of the universe (the factor
/// covariance does not depend on rf or erp); the baseline is never mutated.
inline SweepResult sensitivity_sweep(const Universe& universe, const FactorCovariance& fc, const SolverConfig& base,
                                     std::vector<SensitivityScenario> scenarios, Method method,
                                     const std::vector<std::uint64_t>& seeds, unsigned threads = 1) {
  SweepResult out;
  for (auto& s : scenarios) {
    MarketParams market = universe.market();
    if (s.overrides.rf_shift) market.rf += *s.overrides.rf_shift;
    if (s.overrides.erp_scale) market.erp *= *s.overrides.erp_scale;
    if (s.overrides.erp_shift) market.erp += *s.overrides.erp_shift;
    const Universe shifted = universe.with_market(market);
    SolverConfig cfg = base;
    if (s.overrides.k) cfg.constraints.k = *s.overrides.k;
    if (s.overrides.cap) cfg.constraints.weight_cap = *s.overrides.cap;
    s.result = run_campaign(method, shifted, fc, cfg, seeds, threads);
  }
  const std::size_t m = scenarios.size();
  out.overlap.assign(m, std::vector<double>(m, 1.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      out.overlap[a][b] = jaccard_overlap(scenarios[a].result->best_support, scenarios[b].result->best_support);
  out.scenarios = std::move(scenarios);
  return out;
}

struct EnvironmentInfo {
  std::string cpu;
  unsigned cores = 0;
  std::string os;
  std::string compiler;
};

inline EnvironmentInfo probe_environment() {
  EnvironmentInfo env;
  env.cores = std::thread::hardware_concurrency();
  if (std::ifstream cpuinfo("/proc/cpuinfo"); cpuinfo) {
    std::string line;
    while (std::getline(cpuinfo, line)) {
      if (line.rfind("model name", 0) == 0) {
        env.cpu = line.substr(line.find(':') + 2);
        break;
      }
    }
  }
  if (env.cpu.empty()) env.cpu = "unknown";
#if defined(__unix__) || defined(__APPLE__)
  utsname u{};
  if (uname(&u) == 0) env.os = std::string(u.sysname) + " " + u.release + " " + u.machine;
#endif
  if (env.os.empty()) env.os = "unknown";
#if defined(__clang__)
  env.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  env.compiler = "gcc " __VERSION__;
#else
  env.compiler = "unknown";
#endif
  return env;
}

struct ProfileRow {
  std::string label;
  Method method = Method::MonteCarlo;
  RunDistribution distribution;
};

struct RuntimeProfile {
  EnvironmentInfo environment;
  std::vector<ProfileRow> rows;
};

inline RuntimeProfile runtime_profile(const Universe& universe, const FactorCovariance& fc,
                                      const std::vector<HeuristicSpec>& entries, const std::vector<std::uint64_t>& seeds) {
  RuntimeProfile p;
  p.environment = probe_environment();
  for (const auto& e : entries) p.rows.push_back({e.label, e.method, run_campaign(e.method, universe, fc, e.config, seeds)});
  return p;
}

/// Random single-index universe: beta ~ U[beta_lo, beta_hi], sigma ~
/// U[sigma_lo, sigma_hi], firms ~ U{1..200}; ids "A000", "A001", ...
struct SyntheticSpec {
  std::size_t n = 20;
  std::uint64_t seed = 1;
  double beta_lo = 0.3, beta_hi = 1.8;
  double sigma_lo = 0.15, sigma_hi = 0.75;
  MarketParams market{0.0397, 0.0423, 0.17};
};

inline Universe synthetic_universe(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::vector<AssetRecord> assets;
  const int width = spec.n > 1000 ? 5 : 3;
  for (std::size_t i = 0; i < spec.n; ++i) {
    AssetRecord a;
    std::string num = std::to_string(i);
    a.id = "A" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num;
    a.name = "Synthetic " + a.id;
    a.beta = spec.beta_lo + (spec.beta_hi - spec.beta_lo) * rng.uniform();
    a.sigma = spec.sigma_lo + (spec.sigma_hi - spec.sigma_lo) * rng.uniform();
    a.firms = 1 + static_cast<long>(rng.below(200));
    assets.push_back(std::move(a));
  }
  return Universe(std::move(assets), spec.market,
                  {{AuditEntry::Level::Info, "synthetic universe n=" + std::to_string(spec.n) + " seed=" +
                                                 std::to_string(spec.seed)}});
}

}  // namespace cardsel

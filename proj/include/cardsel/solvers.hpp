#pragma once

/**
 * @file solvers.hpp
 * @brief Search over K-sparse long-only portfolios.
 *
 * Four schemes share one evaluation core:
 *
 *  - greedy_select     top-K by a per-asset score, deterministic
 *  - monte_carlo       uniform K-subsets, Dirichlet(1) or equal weights
 *  - genetic_algorithm K-one bit strings, tournament(2) + uniform crossover
 *                      + swap mutation + random repair, elitism 1
 *  - exact_enumerate   all C(n, K) subsets in lexicographic order
 *
 * and a continuous stage, reoptimize_weights, that improves the weights on a
 * fixed support with a staged Dirichlet local search centred on the incumbent.
 *
 * Every run is single-threaded and a pure function of (universe, fc, config):
 * the only randomness is a cardsel::Rng seeded from config.seed.
 *
 * Thread Safety: runs share no mutable state and may execute concurrently.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cardsel/calibration.hpp"
#include "cardsel/error.hpp"
#include "cardsel/metrics.hpp"
#include "cardsel/rng.hpp"

namespace cardsel {

enum class Method { Greedy, MonteCarlo, Genetic, Exact };
enum class Weighting { EqualWeight, Dirichlet, Reoptimized };
enum class Objective { Sharpe, Scalarized };
enum class GreedyScore { CapmProxy, MuOverSigma };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Greedy: return "greedy";
    case Method::MonteCarlo: return "mc";
    case Method::Genetic: return "ga";
    case Method::Exact: return "exact";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "greedy") return Method::Greedy;
  if (s == "mc") return Method::MonteCarlo;
  if (s == "ga") return Method::Genetic;
  if (s == "exact") return Method::Exact;
  fail(ErrorKind::InvalidInput, "unknown method '" + std::string(s) + "' (expected greedy|mc|ga|exact)");
}

inline std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::EqualWeight: return "equal";
    case Weighting::Dirichlet: return "dirichlet";
    case Weighting::Reoptimized: return "reopt";
  }
  return "unknown";
}

inline Weighting parse_weighting(std::string_view s) {
  if (s == "equal") return Weighting::EqualWeight;
  if (s == "dirichlet") return Weighting::Dirichlet;
  if (s == "reopt") return Weighting::Reoptimized;
  fail(ErrorKind::InvalidInput, "unknown weighting '" + std::string(s) + "' (expected equal|dirichlet|reopt)");
}

inline std::string_view to_string(Objective o) { return o == Objective::Sharpe ? "sharpe" : "scalarized"; }

inline Objective parse_objective(std::string_view s) {
  if (s == "sharpe") return Objective::Sharpe;
  if (s == "scalarized") return Objective::Scalarized;
  fail(ErrorKind::InvalidInput, "unknown objective '" + std::string(s) + "' (expected sharpe|scalarized)");
}

inline std::string_view to_string(GreedyScore s) { return s == GreedyScore::CapmProxy ? "proxy" : "mu_over_sigma"; }

inline GreedyScore parse_greedy_score(std::string_view s) {
  if (s == "proxy") return GreedyScore::CapmProxy;
  if (s == "mu_over_sigma") return GreedyScore::MuOverSigma;
  fail(ErrorKind::InvalidInput, "unknown greedy score '" + std::string(s) + "' (expected proxy|mu_over_sigma)");
}

/// Staged Dirichlet local search schedule used by reoptimize_weights.
struct ReoptSchedule {
  std::size_t stages = 3;
  double concentration_growth = 4.0;  ///< alpha multiplier per stage
  double alpha_floor = 1e-3;          ///< keeps alpha_i > 0 for zero-weight members

  std::string describe() const {
    return "dirichlet-local-search(stages=" + std::to_string(stages) + ",alpha=K*w_inc*" +
           format_double(concentration_growth) + "^stage,floor=" + format_double(alpha_floor) + ")";
  }
};

struct SolverConfig {
  std::uint64_t seed = 1;
  std::size_t draws = 5000;       ///< Monte Carlo portfolios
  std::size_t population = 30;    ///< GA population P
  std::size_t generations = 30;   ///< GA generations G
  std::size_t reopt_budget = 3000;  ///< Dirichlet samples per re-optimization (M)
  ConstraintSet constraints;
  Weighting weighting = Weighting::EqualWeight;
  Objective objective = Objective::Sharpe;
  double lambda = 1.0;            ///< risk-return trade-off for the scalarized objective
  GreedyScore greedy_score = GreedyScore::CapmProxy;
  bool polish_best = false;       ///< re-optimize the weights of the final best support
  std::size_t checkpoint_every = 0;  ///< MC running-best checkpoint spacing; 0 = draws/100
  std::size_t max_cap_retries = 100;
  std::uint64_t enumeration_ceiling = 10'000'000;
  bool keep_log = true;           ///< retain every evaluated (mu, sigma, sharpe)
  ReoptSchedule schedule;

  void validate(std::size_t n) const {
    constraints.validate(n);
    if (draws < 1 || population < 2 || generations < 1 || reopt_budget < 1)
      fail(ErrorKind::InvalidInput, "budgets must be >= 1 (population >= 2)");
    if (objective == Objective::Scalarized && !(lambda > 0.0))
      fail(ErrorKind::InvalidInput, "scalarized objective requires lambda > 0");
  }
};

struct EvalRecord {
  double mu_p;
  double sigma_p;
  double sharpe;
};

struct Checkpoint {
  std::uint64_t evaluations;
  double best_fitness;
};

struct SolverRun {
  Method method = Method::MonteCarlo;
  SolverConfig config;
  Portfolio best;
  PortfolioEvaluation best_eval;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<EvalRecord> log;
  std::vector<Checkpoint> running_best;
  std::uint64_t evaluations = 0;        ///< candidate portfolios scored by the outer search
  std::uint64_t inner_evaluations = 0;  ///< re-optimization samples scored
  std::uint64_t skipped = 0;            ///< subsets dropped after exhausting cap retries
  std::uint64_t infeasible = 0;         ///< scored candidates violating beta band / target return
  std::uint64_t subsets_visited = 0;
  double wall_time = 0.0;
  std::map<std::string, std::string> metadata;

  bool found() const { return !best.support.empty(); }

  std::vector<double> sharpes() const {
    std::vector<double> s;
    s.reserve(log.size());
    for (const auto& r : log) s.push_back(r.sharpe);
    return s;
  }
};

namespace detail {

inline double fitness_of(const PortfolioEvaluation& e, const SolverConfig& cfg) {
  if (cfg.objective == Objective::Sharpe) return e.sharpe;
  return -(e.variance - cfg.lambda * e.mu_p);
}

/// Constraints that do not depend on how weights were generated.
inline bool passes_outcome_constraints(const PortfolioEvaluation& e, const ConstraintSet& c) {
  if (c.beta_band && (e.beta_p < c.beta_band->first - 1e-12 || e.beta_p > c.beta_band->second + 1e-12)) return false;
  if (c.min_return && e.mu_p < *c.min_return - 1e-12) return false;
  return true;
}

inline bool within_caps(std::span<const std::size_t> support, std::span<const double> w, const ConstraintSet& c) {
  if (!c.has_caps()) return true;
  for (std::size_t k = 0; k < support.size(); ++k)
    if (w[k] > c.cap_for(support[k]) + 1e-12) return false;
  return true;
}

/// Shared bookkeeping: logging, incumbent tracking, checkpoints.
class Tracker {
 public:
  Tracker(SolverRun& run, const Universe& u, const FactorCovariance& fc) : run_(run), u_(u), fc_(fc) {}

  /// Scores a candidate; returns its fitness (-inf when infeasible).
  double consider(std::span<const std::size_t> support, std::span<const double> w) {
    const auto e = evaluate_weights(support, w, u_, fc_);
    ++run_.evaluations;
    if (run_.config.keep_log) run_.log.push_back({e.mu_p, e.sigma_p, e.sharpe});
    if (!passes_outcome_constraints(e, run_.config.constraints)) {
      ++run_.infeasible;
      return -std::numeric_limits<double>::infinity();
    }
    const double f = fitness_of(e, run_.config);
    if (!run_.found() || f > run_.best_fitness) {
      run_.best.support.assign(support.begin(), support.end());
      run_.best.weights.assign(w.begin(), w.end());
      run_.best_eval = e;
      run_.best_fitness = f;
    }
    return f;
  }

  void checkpoint() {
    if (!run_.running_best.empty() && run_.running_best.back().evaluations == run_.evaluations) return;
    run_.running_best.push_back({run_.evaluations, run_.best_fitness});
  }

 private:
  SolverRun& run_;
  const Universe& u_;
  const FactorCovariance& fc_;
};

/// Indices eligible for the K counted positions (everything but an overlay).
inline std::vector<std::size_t> selection_pool(std::size_t n, const ConstraintSet& c) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i)
    if (c.counts_toward_k(i)) pool.push_back(i);
  return pool;
}

/// Subset plus overlay (if any), sorted.
inline std::vector<std::size_t> full_support(std::vector<std::size_t> subset, const ConstraintSet& c) {
  if (c.overlay) {
    subset.push_back(c.overlay->index);
    std::sort(subset.begin(), subset.end());
  }
  return subset;
}

/// Equal weights; an overlay asset gets min(cap, 1/(K+1)) and the counted
/// assets share the remainder equally.
inline std::vector<double> equal_weights(std::span<const std::size_t> support, const ConstraintSet& c) {
  const std::size_t m = support.size();
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  if (c.overlay) {
    const double wo = std::min(c.overlay->cap, 1.0 / static_cast<double>(m));
    const double rest = (1.0 - wo) / static_cast<double>(m - 1);
    for (std::size_t k = 0; k < m; ++k) w[k] = support[k] == c.overlay->index ? wo : rest;
  }
  return w;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  __uint128_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace detail

struct ReoptResult {
  Portfolio portfolio;
  PortfolioEvaluation evaluation;
  double fitness = 0.0;
  double equal_weight_fitness = -std::numeric_limits<double>::infinity();
  std::uint64_t samples = 0;      ///< Dirichlet proposals drawn (the budget M)
  std::uint64_t rejected = 0;     ///< proposals discarded for breaking a cap
  std::uint64_t evaluations = 0;  ///< weight vectors scored, equal-weight start included
};

/**
 * Maximizes the configured fitness (Sharpe by default) over the simplex on a
 * fixed support, honouring caps, beta band and target return.
 *
 * The search starts from equal weights and runs `schedule.stages` stages of
 * Dirichlet proposals around the current incumbent with concentration
 * alpha = K * w_inc * growth^stage. Proposals violating a cap are rejected.
 * Since the equal-weight start is kept unless beaten, the result is never
 * worse than equal weights when those are feasible.
 */
inline ReoptResult reoptimize_weights(std::span<const std::size_t> support, const Universe& universe,
                                      const FactorCovariance& fc, const SolverConfig& config, std::uint64_t seed) {
  const auto& c = config.constraints;
  const std::size_t m = support.size();
  if (m == 0) fail(ErrorKind::InvalidInput, "reoptimize_weights: empty support");
  double cap_sum = 0.0;
  for (std::size_t i : support) cap_sum += c.cap_for(i);
  if (cap_sum < 1.0 - 1e-12)
    fail(ErrorKind::Infeasible, "structurally infeasible: caps on the support sum to " + format_double(cap_sum) + " < 1");

  ReoptResult out;
  out.portfolio.support.assign(support.begin(), support.end());
  bool have = false;
  auto offer = [&](std::span<const double> w) {
    const auto e = evaluate_weights(support, w, universe, fc);
    ++out.evaluations;
    if (!detail::passes_outcome_constraints(e, c)) return false;
    const double f = detail::fitness_of(e, config);
    if (!have || f > out.fitness) {
      out.portfolio.weights.assign(w.begin(), w.end());
      out.evaluation = e;
      out.fitness = f;
      have = true;
      return true;
    }
    return false;
  };

  if (m == 1) {
    const std::vector<double> w{1.0};
    if (!offer(w)) fail(ErrorKind::Infeasible, "single-asset support violates the beta band or target return");
    out.equal_weight_fitness = out.fitness;
    return out;
  }

  const auto ew = detail::equal_weights(support, c);
  if (detail::within_caps(support, ew, c) && offer(ew)) out.equal_weight_fitness = out.fitness;

  Rng rng(seed);
  std::vector<double> alpha(m), w(m);
  const std::size_t stages = std::max<std::size_t>(1, config.schedule.stages);
  const std::size_t budget = config.reopt_budget;
  double concentration = static_cast<double>(m);
  for (std::size_t s = 0; s < stages; ++s) {
    const std::size_t quota = budget / stages + (s + 1 == stages ? budget % stages : 0);
    for (std::size_t draw = 0; draw < quota; ++draw) {
      ++out.samples;
      if (have) {
        for (std::size_t k = 0; k < m; ++k)
          alpha[k] = std::max(concentration * out.portfolio.weights[k], config.schedule.alpha_floor);
        sample_dirichlet(rng, alpha, w);
      } else {
        sample_flat_dirichlet(rng, w);
      }
      if (!detail::within_caps(support, w, c)) {
        ++out.rejected;
        continue;
      }
      offer(w);
    }
    concentration *= config.schedule.concentration_growth;
  }
  if (!have) fail(ErrorKind::Infeasible, "re-optimization found no weights satisfying the constraints on this support");
  return out;
}

namespace detail {

/// Weights for a support under the configured scheme; nullopt when cap
/// rejection exhausts its retries.
inline std::optional<std::vector<double>> weights_for(std::span<const std::size_t> support, const Universe& universe,
                                                      const FactorCovariance& fc, SolverRun& run, Rng& rng) {
  const auto& cfg = run.config;
  const auto& c = cfg.constraints;
  switch (cfg.weighting) {
    case Weighting::EqualWeight: {
      auto w = equal_weights(support, c);
      if (!within_caps(support, w, c)) return std::nullopt;
      return w;
    }
    case Weighting::Dirichlet: {
      std::vector<double> w(support.size());
      for (std::size_t attempt = 0; attempt <= cfg.max_cap_retries; ++attempt) {
        sample_flat_dirichlet(rng, w);
        if (within_caps(support, w, c)) return w;
      }
      return std::nullopt;
    }
    case Weighting::Reoptimized: {
      const std::uint64_t sub_seed = rng();
      try {
        auto r = reoptimize_weights(support, universe, fc, cfg, sub_seed);
        run.inner_evaluations += r.evaluations;
        return std::move(r.portfolio.weights);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Infeasible) throw;
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

inline void stamp_metadata(SolverRun& run) {
  run.metadata["rng"] = "xoshiro256** seeded by splitmix64";
  run.metadata["weighting"] = std::string(to_string(run.config.weighting));
  run.metadata["objective"] = std::string(to_string(run.config.objective));
  if (run.config.weighting == Weighting::Reoptimized || run.config.polish_best)
    run.metadata["reopt_schedule"] = run.config.schedule.describe();
}

inline void finish(SolverRun& run, const Universe& universe, const FactorCovariance& fc,
                   std::chrono::steady_clock::time_point start) {
  if (run.config.polish_best && run.found()) {
    Rng rng(run.config.seed ^ 0x5eed5eed5eed5eedULL);
    auto r = reoptimize_weights(run.best.support, universe, fc, run.config, rng());
    run.inner_evaluations += r.evaluations;
    if (r.fitness > run.best_fitness) {
      run.best = std::move(r.portfolio);
      run.best_eval = r.evaluation;
      run.best_fitness = r.fitness;
      if (!run.running_best.empty()) run.running_best.push_back({run.evaluations, run.best_fitness});
    }
  }
  run.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!run.found())
    fail(ErrorKind::Infeasible, std::string(to_string(run.method)) + ": no evaluated portfolio satisfied the constraints");
}

}  // namespace detail

/// Top-K assets by score (ties: ascending asset id), equal or re-optimized
/// weights. Deterministic; the seed only feeds re-optimization.
inline SolverRun greedy_select(const Universe& universe, const FactorCovariance& fc, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(universe.size());
  SolverRun run;
  run.method = Method::Greedy;
  run.config = config;
  detail::stamp_metadata(run);
  run.metadata["score"] = std::string(to_string(config.greedy_score));

  auto pool = detail::selection_pool(universe.size(), config.constraints);
  std::vector<double> score(universe.size());
  for (std::size_t i : pool) {
    const auto& a = universe.asset(i);
    score[i] = config.greedy_score == GreedyScore::CapmProxy ? capm_sharpe_proxy(a, universe.market())
                                                             : universe.mu(i) / a.sigma;
  }
  std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return universe.asset(a).id < universe.asset(b).id;
  });
  pool.resize(config.constraints.k);
  const auto support = detail::full_support(pool, config.constraints);

  Rng rng(config.seed);
  detail::Tracker tracker(run, universe, fc);
  if (auto w = detail::weights_for(support, universe, fc, run, rng)) tracker.consider(support, *w);
  else ++run.skipped;
  tracker.checkpoint();
  detail::finish(run, universe, fc, start);
  return run;
}

/// Uniform K-subsets (partial Fisher-Yates) with Dirichlet(1) or equal
/// weights; caps enforced by rejection with bounded retries.
inline SolverRun monte_carlo(const Universe& universe, const FactorCovariance& fc, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(universe.size());
  SolverRun run;
  run.method = Method::MonteCarlo;
  run.config = config;
  detail::stamp_metadata(run);
  if (config.keep_log) run.log.reserve(config.draws);

  Rng rng(config.seed);
  auto scratch = detail::selection_pool(universe.size(), config.constraints);
  const std::size_t every = config.checkpoint_every ? config.checkpoint_every : std::max<std::size_t>(1, config.draws / 100);
  detail::Tracker tracker(run, universe, fc);
  for (std::size_t draw = 1; draw <= config.draws; ++draw) {
    const auto support = detail::full_support(sample_subset(rng, scratch, config.constraints.k), config.constraints);
    if (auto w = detail::weights_for(support, universe, fc, run, rng)) tracker.consider(support, *w);
    else ++run.skipped;
    if (draw % every == 0) tracker.checkpoint();
  }
  tracker.checkpoint();
  detail::finish(run, universe, fc, start);
  return run;
}

/**
 * Genetic search over K-one chromosomes on the selection pool.
 *
 * Generation 0 is P uniform K-subsets. Each later generation keeps the best
 * individual (elitism 1) and breeds P-1 children: two size-2 tournaments pick
 * the parents, uniform crossover mixes them, repair adds or removes uniformly
 * chosen positions until exactly K ones remain, and each one is moved to a
 * random zero with probability 1/K. Evaluations are counted exactly:
 * P + G(P-1).
 */
inline SolverRun genetic_algorithm(const Universe& universe, const FactorCovariance& fc, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(universe.size());
  SolverRun run;
  run.method = Method::Genetic;
  run.config = config;
  detail::stamp_metadata(run);
  run.metadata["operators"] = "tournament(2), uniform crossover, swap mutation rate 1/K, random repair, elitism 1";

  const auto& c = config.constraints;
  const auto pool = detail::selection_pool(universe.size(), c);
  const std::size_t m = pool.size();
  const std::size_t k = c.k;
  const std::size_t P = config.population;
  Rng rng(config.seed);
  detail::Tracker tracker(run, universe, fc);

  struct Individual {
    std::vector<char> genes;
    double fitness;
  };

  auto score = [&](const std::vector<char>& genes) {
    std::vector<std::size_t> subset;
    subset.reserve(k);
    for (std::size_t j = 0; j < m; ++j)
      if (genes[j]) subset.push_back(pool[j]);
    const auto support = detail::full_support(std::move(subset), c);
    if (auto w = detail::weights_for(support, universe, fc, run, rng)) return tracker.consider(support, *w);
    ++run.skipped;
    return -std::numeric_limits<double>::infinity();
  };

  std::vector<std::size_t> positions(m);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  std::vector<Individual> population;
  population.reserve(P);
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<char> genes(m, 0);
    for (std::size_t j : sample_subset(rng, positions, k)) genes[j] = 1;
    const double f = score(genes);
    population.push_back({std::move(genes), f});
  }
  tracker.checkpoint();

  auto tournament = [&]() -> const Individual& {
    const auto a = static_cast<std::size_t>(rng.below(P));
    auto b = static_cast<std::size_t>(rng.below(P - 1));
    if (b >= a) ++b;
    const auto& x = population[a];
    const auto& y = population[b];
    if (x.fitness != y.fitness) return x.fitness > y.fitness ? x : y;
    return a < b ? x : y;
  };

  std::vector<std::size_t> ones, zeros;
  const double mutation_rate = 1.0 / static_cast<double>(k);
  for (std::size_t g = 0; g < config.generations; ++g) {
    std::vector<Individual> next;
    next.reserve(P);
    std::size_t elite = 0;
    for (std::size_t p = 1; p < P; ++p)
      if (population[p].fitness > population[elite].fitness) elite = p;
    next.push_back(population[elite]);

    while (next.size() < P) {
      const auto& a = tournament();
      const auto& b = tournament();
      std::vector<char> genes(m);
      for (std::size_t j = 0; j < m; ++j) genes[j] = a.genes[j] == b.genes[j] ? a.genes[j] : (rng.uniform() < 0.5 ? a.genes[j] : b.genes[j]);

      // Repair to exactly K ones.
      ones.clear();
      zeros.clear();
      for (std::size_t j = 0; j < m; ++j) (genes[j] ? ones : zeros).push_back(j);
      while (ones.size() > k) {
        const auto r = static_cast<std::size_t>(rng.below(ones.size()));
        genes[ones[r]] = 0;
        zeros.push_back(ones[r]);
        ones[r] = ones.back();
        ones.pop_back();
      }
      while (ones.size() < k) {
        const auto r = static_cast<std::size_t>(rng.below(zeros.size()));
        genes[zeros[r]] = 1;
        ones.push_back(zeros[r]);
        zeros[r] = zeros.back();
        zeros.pop_back();
      }

      // Swap mutation.
      if (!zeros.empty()) {
        for (std::size_t r = 0; r < ones.size(); ++r) {
          if (rng.uniform() >= mutation_rate) continue;
          const auto z = static_cast<std::size_t>(rng.below(zeros.size()));
          genes[ones[r]] = 0;
          genes[zeros[z]] = 1;
          std::swap(ones[r], zeros[z]);
        }
      }

      const double f = score(genes);
      next.push_back({std::move(genes), f});
    }
    population = std::move(next);
    tracker.checkpoint();
  }
  run.metadata["expected_evaluations"] = std::to_string(P + config.generations * (P - 1));
  detail::finish(run, universe, fc, start);
  return run;
}

/// Number of K-subsets the exact solver would visit under `constraints`.
inline std::uint64_t enumeration_size(std::size_t n, const ConstraintSet& constraints) {
  const std::size_t pool = constraints.overlay ? n - 1 : n;
  return detail::binomial(pool, constraints.k);
}

/// Visits every K-subset of the selection pool in lexicographic order.
inline SolverRun exact_enumerate(const Universe& universe, const FactorCovariance& fc, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(universe.size());
  const auto& c = config.constraints;
  const std::uint64_t total = enumeration_size(universe.size(), c);
  if (total > config.enumeration_ceiling)
    fail(ErrorKind::LimitExceeded, "enumeration of C(n,K) = " + std::to_string(total) + " subsets exceeds the ceiling of " +
                                       std::to_string(config.enumeration_ceiling));
  SolverRun run;
  run.method = Method::Exact;
  run.config = config;
  detail::stamp_metadata(run);
  run.metadata["subsets_total"] = std::to_string(total);
  if (config.keep_log) run.log.reserve(static_cast<std::size_t>(total));

  const auto pool = detail::selection_pool(universe.size(), c);
  const std::size_t m = pool.size();
  const std::size_t k = c.k;
  Rng rng(config.seed);
  detail::Tracker tracker(run, universe, fc);
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<std::size_t> subset(k);
  const std::uint64_t every = std::max<std::uint64_t>(1, total / 100);
  for (;;) {
    for (std::size_t j = 0; j < k; ++j) subset[j] = pool[idx[j]];
    const auto support = detail::full_support(subset, c);
    if (auto w = detail::weights_for(support, universe, fc, run, rng)) tracker.consider(support, *w);
    else ++run.skipped;
    ++run.subsets_visited;
    if (run.subsets_visited % every == 0) tracker.checkpoint();

    std::size_t j = k;
    while (j > 0 && idx[j - 1] == m - k + (j - 1)) --j;
    if (j == 0) break;
    ++idx[j - 1];
    for (std::size_t t = j; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
  tracker.checkpoint();
  detail::finish(run, universe, fc, start);
  return run;
}

inline SolverRun solve(Method method, const Universe& universe, const FactorCovariance& fc, const SolverConfig& config) {
  switch (method) {
    case Method::Greedy: return greedy_select(universe, fc, config);
    case Method::MonteCarlo: return monte_carlo(universe, fc, config);
    case Method::Genetic: return genetic_algorithm(universe, fc, config);
    case Method::Exact: return exact_enumerate(universe, fc, config);
  }
  fail(ErrorKind::Internal, "unhandled method");
}

}  // namespace cardsel

// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <cardsel/cardsel.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "golden_options.hpp"

using namespace cardsel;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

MarketParams reference_market() { return {golden::kRf, golden::kErp, 0.17}; }

AssetRecord golden_underlying() { return {"software_internet", "Software (Internet)", 29, golden::kBeta, golden::kSigma}; }

OptionSpec golden_spec(double moneyness, double maturity) {
  return OptionSpec::on(golden_underlying(), 100.0, 100.0 * moneyness, maturity, golden::kRf);
}

Universe instance(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  return synthetic_universe(spec);
}

void check_grid_point(Outcome& o, const golden::GridPoint& g) {
  const auto spec = golden_spec(g.moneyness, g.maturity);
  const auto d = bs_call_price(spec);
  const auto e = embed_option(spec, golden_underlying(), reference_market());
  std::ostringstream tag;
  tag << "K/S0=" << g.moneyness << " T=" << g.maturity;
  o.require(std::abs(d.price - g.price) <= 0.01 + 1e-9, tag.str() + " price " + format_double(d.price));
  o.require(std::abs(d.delta - g.delta) <= 0.001 + 1e-9, tag.str() + " delta " + format_double(d.delta));
  o.require(std::abs(d.leverage - g.leverage) <= 0.01 + 1e-9, tag.str() + " L " + format_double(d.leverage));
  o.require(std::abs(e.beta_opt - g.beta_opt) <= 0.01 + 1e-9, tag.str() + " beta_opt " + format_double(e.beta_opt));
  o.require(std::abs(e.sigma_opt - g.sigma_opt) <= 0.01 + 1e-9, tag.str() + " sigma_opt " + format_double(e.sigma_opt));
  o.require(std::abs(100.0 * e.mu_opt - g.mu_opt_pct) <= 0.02 + 1e-9, tag.str() + " mu_opt " + format_double(e.mu_opt));
}

Outcome criterion1() {
  Outcome o;
  check_grid_point(o, golden::kGrid[4]);
  // Time many repetitions and take the per-call average to avoid clock granularity.
  constexpr int reps = 10000;
  volatile double sink = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    const auto spec = golden_spec(1.0, 0.5);
    sink = sink + embed_option(spec, golden_underlying(), reference_market()).mu_opt;
  }
  const double per_call = seconds_since(t0) / reps;
  o.detail << " per-call " << per_call * 1e6 << " us";
  o.require(per_call < 1e-3, "runtime >= 1 ms");
  return o;
}

Outcome criterion2() {
  Outcome o;
  for (const auto& g : golden::kGrid) check_grid_point(o, g);
  const std::array<double, 3> m{0.9, 1.0, 1.1}, t{0.25, 0.5, 1.0};
  for (double k : m)
    for (std::size_t j = 1; j < t.size(); ++j)
      o.require(bs_call_price(golden_spec(k, t[j])).leverage < bs_call_price(golden_spec(k, t[j - 1])).leverage,
                "L not decreasing in T");
  for (double T : t)
    for (std::size_t i = 1; i < m.size(); ++i)
      o.require(bs_call_price(golden_spec(m[i], T)).leverage > bs_call_price(golden_spec(m[i - 1], T)).leverage,
                "L not increasing in K/S0");
  return o;
}

Outcome criterion3() {
  Outcome o;
  for (const auto& g : golden::kGrid) {
    const auto b = bump_test(golden_spec(g.moneyness, g.maturity), 0.01);
    std::ostringstream tag;
    tag << "K/S0=" << g.moneyness << " T=" << g.maturity;
    o.require(std::abs(100.0 * b.relerr_up - g.relerr_up_pct) <= 0.02 + 1e-9, tag.str() + " up");
    o.require(std::abs(100.0 * b.relerr_dn - g.relerr_dn_pct) <= 0.02 + 1e-9, tag.str() + " down");
    o.require(b.relerr_up <= 0.0 && b.relerr_dn <= 0.0, tag.str() + " sign");
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  const Universe u({golden_underlying(), {"retail_building_supply", "Retail (Building Supply)", 14, 1.535, 0.459}},
                   {0.0397, 0.0423, std::nullopt});
  const auto shown = [](double x) { return std::round(x * 1000.0) / 1000.0; };
  o.require(shown(u.mu(0)) == 0.111, "software mu " + format_double(u.mu(0)));
  o.require(shown(u.mu(1)) == 0.105, "retail mu " + format_double(u.mu(1)));
  return o;
}

std::string run_command(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  status = pclose(pipe);
  return out;
}

Outcome criterion5() {
  Outcome o;
  const auto u = instance(20, 1);
  const auto fc = build_factor_covariance(u);
  SolverConfig cfg;
  const auto b = exact_benchmark(u, fc, 20, 6, cfg, {});
  o.require(b.subsets_visited == 38760, "library visited " + std::to_string(b.subsets_visited));
#ifdef CARDSEL_CLI_PATH
  int status = 0;
  const auto out = run_command(std::string("\"") + CARDSEL_CLI_PATH +
                                   "\" benchmark --n 20 --k 6 --out acceptance_benchmark 2>&1",
                               status);
  o.require(status == 0, "cli exit status " + std::to_string(status));
  o.require(out.find("subsets_visited: 38760") != std::string::npos, "cli output lacks 38760");
#else
  o.detail << " (cli not built; library only)";
#endif
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> ga_gaps, mc_gaps;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto u = instance(12, seed);
    const auto fc = build_factor_covariance(u);
    SolverConfig cfg;
    cfg.seed = seed;
    cfg.constraints.k = 4;
    cfg.weighting = Weighting::EqualWeight;
    cfg.population = 30;
    cfg.generations = 30;
    cfg.draws = 2000;
    const double exact = exact_enumerate(u, fc, cfg).best_eval.sharpe;
    ga_gaps.push_back(optimality_gap_pct(exact, genetic_algorithm(u, fc, cfg).best_eval.sharpe));
    mc_gaps.push_back(optimality_gap_pct(exact, monte_carlo(u, fc, cfg).best_eval.sharpe));
  }
  const double elapsed = seconds_since(t0);
  for (const auto& [name, gaps] : {std::pair{"GA", ga_gaps}, std::pair{"MC", mc_gaps}}) {
    const double med = quantile(gaps, 0.5);
    const double mx = *std::max_element(gaps.begin(), gaps.end());
    o.detail << ' ' << name << " median " << med << "% max " << mx << "%";
    o.require(med <= 2.0, std::string(name) + " median gap");
    o.require(mx <= 10.0, std::string(name) + " max gap");
  }
  o.detail << " in " << elapsed << " s";
  o.require(elapsed < 30.0, "runtime");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto u = instance(25, 7);
  const auto fc = build_factor_covariance(u);
  struct Case {
    const char* name;
    Method method;
    Weighting weighting;
  };
  for (const Case c : {Case{"mc", Method::MonteCarlo, Weighting::Dirichlet}, Case{"ga", Method::Genetic, Weighting::EqualWeight},
                       Case{"mc+reopt", Method::MonteCarlo, Weighting::Reoptimized},
                       Case{"ga+reopt", Method::Genetic, Weighting::Reoptimized}}) {
    SolverConfig cfg;
    cfg.constraints.k = 5;
    cfg.weighting = c.weighting;
    cfg.draws = c.weighting == Weighting::Reoptimized ? 40 : 2000;
    cfg.population = 10;
    cfg.generations = c.weighting == Weighting::Reoptimized ? 3 : 20;
    cfg.reopt_budget = 300;
    const RunJsonOptions opts{false, true};
    cfg.seed = 11;
    const auto a = run_to_json(solve(c.method, u, fc, cfg), u, opts).dump();
    const auto b = run_to_json(solve(c.method, u, fc, cfg), u, opts).dump();
    cfg.seed = 12;
    const auto other = run_to_json(solve(c.method, u, fc, cfg), u, opts);
    o.require(a == b, std::string(c.name) + " not bit-identical");
    o.require(json::parse(a)["log"] != other["log"], std::string(c.name) + " logs equal across seeds");
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto u = instance(40, 8);
  const auto fc = build_factor_covariance(u);
  Rng rng(2024);
  SolverConfig cfg;
  std::size_t strict = 0, nondegenerate = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(7);
    std::vector<std::size_t> pool(u.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    std::vector<std::size_t> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(support.begin(), support.end());
    const auto r = reoptimize_weights(support, u, fc, cfg, 1000 + static_cast<std::uint64_t>(trial));
    o.require(r.fitness >= r.equal_weight_fitness, "reopt below equal weight on trial " + std::to_string(trial));
    // Identical assets make every weighting equivalent; such supports cannot improve.
    bool identical = true;
    for (auto i : support)
      identical = identical && u.asset(i).beta == u.asset(support[0]).beta && u.asset(i).sigma == u.asset(support[0]).sigma;
    if (identical) continue;
    ++nondegenerate;
    strict += r.fitness > r.equal_weight_fitness;
  }
  const double share = static_cast<double>(strict) / static_cast<double>(nondegenerate);
  o.detail << " strict " << strict << "/" << nondegenerate;
  o.require(share >= 0.90, "strict share below 90%");
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto u = instance(30, 9);
  const auto fc = build_factor_covariance(u);
  Rng rng(9);
  for (double shift : {-0.005, 0.005}) {
    MarketParams m = u.market();
    m.rf += shift;
    const auto shifted = u.with_market(m);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      Portfolio p;
      double total = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i)
        if (rng.uniform() < 0.3) {
          p.support.push_back(i);
          p.weights.push_back(rng.uniform() + 0.01);
          total += p.weights.back();
        }
      if (p.support.empty()) continue;
      for (auto& w : p.weights) w /= total;
      worst = std::max(worst, std::abs(evaluate(p, u, fc).sharpe - evaluate(p, shifted, fc).sharpe));
    }
    o.detail << " rf" << (shift > 0 ? "+" : "") << shift * 1e4 << "bp max diff " << worst;
    o.require(worst <= 1e-12, "rf shift changes Sharpe");
  }

  const auto small = instance(12, 9);
  const auto sfc = build_factor_covariance(small);
  SolverConfig cfg;
  cfg.constraints.k = 4;
  cfg.draws = 2000;
  cfg.seed = 5;
  const auto base_exact = exact_enumerate(small, sfc, cfg).best.support;
  const auto base_mc = monte_carlo(small, sfc, cfg).best.support;
  for (double scale : {0.5, 2.0}) {
    MarketParams m = small.market();
    m.erp *= scale;
    const auto scaled = small.with_market(m);
    o.require(exact_enumerate(scaled, sfc, cfg).best.support == base_exact, "exact argmax moves under ERP scaling");
    o.require(monte_carlo(scaled, sfc, cfg).best.support == base_mc, "paired-seed MC argmax moves under ERP scaling");
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  Rng rng(10);
  double worst_eig = 0.0, worst_rel = 0.0;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(99));
    const auto u = instance(n, 100 + s);
    const auto fc = build_factor_covariance(u);
    const auto dense = materialize_dense(fc);
    worst_eig = std::min(worst_eig, min_eigenvalue(dense));
    for (int t = 0; t < 20; ++t) {
      std::vector<std::size_t> support(n);
      std::iota(support.begin(), support.end(), std::size_t{0});
      Eigen::VectorXd w(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = rng.uniform();
      w /= w.sum();
      const std::vector<double> wv(w.data(), w.data() + w.size());
      const double factor = fc.quadratic_form(support, wv);
      const double full = w.dot(dense * w);
      worst_rel = std::max(worst_rel, std::abs(factor - full) / std::abs(full));
    }
  }
  o.detail << " min eig " << worst_eig << " max rel diff " << worst_rel;
  o.require(worst_eig >= -1e-10, "negative eigenvalue");
  o.require(worst_rel <= 1e-10, "factor and dense disagree");
  return o;
}

Outcome criterion11() {
  Outcome o;
  const auto u = instance(94, 11);
  const auto fc = build_factor_covariance(u);
  SolverConfig cfg;
  cfg.constraints.k = 10;
  cfg.weighting = Weighting::Dirichlet;
  std::vector<Budget> budgets{{500, 0, 0}, {5000, 0, 0}, {50000, 0, 0}};
  const auto rows = effort_grid(Method::MonteCarlo, u, fc, cfg, budgets, {1, 2, 3});
  const auto fit = runtime_scaling(rows, Method::MonteCarlo);
  o.detail << " slope " << fit.slope << " R2 " << fit.r2;
  o.require(fit.slope >= 0.85 && fit.slope <= 1.10, "slope outside [0.85, 1.10]");
  o.require(fit.r2 >= 0.98, "R2 below 0.98");
  return o;
}

Outcome criterion12() {
  Outcome o;
  const auto u = instance(20, 12);
  const auto fc = build_factor_covariance(u);
  SolverConfig cfg;
  double worst = 0.0;
  for (std::size_t a = 0; a + 1 < u.size(); a += 2) {
    const std::vector<std::size_t> support{a, a + 1};
    double best_w = 0.0, best_s = -std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 10000; ++step) {
      const double w = step * 1e-4;
      const std::vector<double> weights{w, 1.0 - w};
      const double s = evaluate_weights(support, weights, u, fc).sharpe;
      if (s > best_s) {
        best_s = s;
        best_w = w;
      }
    }
    const auto r = reoptimize_weights(support, u, fc, cfg, 77 + a);
    worst = std::max(worst, std::abs(r.portfolio.weights[0] - best_w));
  }
  o.detail << " max weight diff " << worst;
  o.require(worst <= 0.02, "reopt weight off the grid optimum");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3},   {4, criterion4},   {5, criterion5},   {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9},   {10, criterion10}, {11, criterion11}, {12, criterion12}};
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ":" << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

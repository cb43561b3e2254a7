// Command-line front end for the cardsel library.
//
// Every subcommand prints a JSON document (or a delimited table) on stdout
// and writes its artifacts under --out. Failures are reported as a JSON
// object on stderr with an exit code that depends on the error kind.

#include <CLI11.hpp>

#include <cardsel/cardsel.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cardsel;

namespace {

constexpr int kExitUsage = 2;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return 2;
    case ErrorKind::Infeasible: return 3;
    case ErrorKind::LimitExceeded: return 4;
    case ErrorKind::Io: return 5;
    case ErrorKind::Internal: return 6;
  }
  return 1;
}

void report_error(std::string_view kind, const std::string& message) {
  json err = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_double(s, what));
  if (out.empty()) fail(ErrorKind::InvalidInput, std::string(what) + ": empty list");
  return out;
}

std::uint64_t parse_uint(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-')
    fail(ErrorKind::InvalidInput, std::string(what) + ": '" + s + "' is not a nonnegative integer");
  return v;
}

// Accepts "1..10", "3,5,8" or a mix such as "1..3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(text, ',')) {
    if (const auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = parse_uint(part.substr(0, dots), "--seeds");
      const auto hi = parse_uint(part.substr(dots + 2), "--seeds");
      if (hi < lo) fail(ErrorKind::InvalidInput, "--seeds: empty range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(parse_uint(part, "--seeds"));
    }
  }
  if (out.empty()) fail(ErrorKind::InvalidInput, "--seeds: no seeds given");
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorKind::InvalidInput, "expected true|false, got '" + s + "'");
}

// Flags shared by every subcommand. Unset optionals leave the config file
// (or the built-in default) untouched.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<double> rf, erp, sigma_m;
  std::optional<std::string> units;
  std::optional<std::size_t> synthetic_n;
  std::optional<std::uint64_t> synthetic_seed;
};

struct SolverFlags {
  std::optional<std::string> method;
  std::optional<std::size_t> k, draws, pop, gens, reopt_budget;
  std::optional<std::string> weighting, objective, score, beta_band, seeds;
  std::optional<double> cap, lambda, min_return;
  bool polish = false;
  unsigned threads = 1;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "JSON run configuration");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--data", f.data, "Universe table (id,name,firms,beta,sigma); synthetic when omitted");
  app->add_option("--rf", f.rf, "Risk-free rate");
  app->add_option("--erp", f.erp, "Equity risk premium");
  app->add_option("--sigma-m", f.sigma_m, "Market volatility");
  app->add_option("--units", f.units, "decimal|percent");
  app->add_option("--synthetic-n", f.synthetic_n, "Size of the synthetic universe");
  app->add_option("--synthetic-seed", f.synthetic_seed, "Seed of the synthetic universe");
}

void add_solver(CLI::App* app, SolverFlags& f, bool with_method = true) {
  if (with_method) app->add_option("--method", f.method, "greedy|mc|ga|exact");
  app->add_option("--k", f.k, "Cardinality");
  app->add_option("--draws", f.draws, "Monte Carlo draws");
  app->add_option("--pop", f.pop, "GA population");
  app->add_option("--gens", f.gens, "GA generations");
  app->add_option("--reopt-budget", f.reopt_budget, "Dirichlet samples per re-optimization");
  app->add_option("--weighting", f.weighting, "equal|dirichlet|reopt");
  app->add_option("--objective", f.objective, "sharpe|scalarized");
  app->add_option("--lambda", f.lambda, "Risk aversion for the scalarized objective");
  app->add_option("--score", f.score, "Greedy score: proxy|mu_over_sigma");
  app->add_option("--cap", f.cap, "Per-asset weight cap");
  app->add_option("--beta-band", f.beta_band, "Portfolio beta band lo,hi");
  app->add_option("--min-return", f.min_return, "Minimum portfolio expected return");
  app->add_flag("--polish", f.polish, "Re-optimize the weights of the final best support");
  app->add_option("--seeds", f.seeds, "Seed set, e.g. 1..10 or 1,2,3");
  app->add_option("--threads", f.threads, "Worker threads for multi-seed campaigns")->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const CommonFlags& c, const SolverFlags* s) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.rf) cfg.market.rf = *c.rf;
  if (c.erp) cfg.market.erp = *c.erp;
  if (c.sigma_m) cfg.market.sigma_m = *c.sigma_m;
  if (c.data) cfg.data_path = *c.data;
  if (c.units) cfg.units = parse_units(*c.units);
  if (c.synthetic_n) cfg.synthetic_n = *c.synthetic_n;
  if (c.synthetic_seed) cfg.synthetic_seed = *c.synthetic_seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.seed) {
    cfg.solver.seed = *c.seed;
    cfg.seeds = {*c.seed};
  }
  if (s) {
    auto& sv = cfg.solver;
    if (s->method) cfg.method = parse_method(*s->method);
    if (s->k) sv.constraints.k = *s->k;
    if (s->draws) sv.draws = *s->draws;
    if (s->pop) sv.population = *s->pop;
    if (s->gens) sv.generations = *s->gens;
    if (s->reopt_budget) sv.reopt_budget = *s->reopt_budget;
    if (s->weighting) sv.weighting = parse_weighting(*s->weighting);
    if (s->objective) sv.objective = parse_objective(*s->objective);
    if (s->lambda) sv.lambda = *s->lambda;
    if (s->score) sv.greedy_score = parse_greedy_score(*s->score);
    if (s->cap) sv.constraints.weight_cap = *s->cap;
    if (s->min_return) sv.constraints.min_return = *s->min_return;
    if (s->beta_band) {
      const auto band = parse_list(*s->beta_band, "--beta-band");
      if (band.size() != 2) fail(ErrorKind::InvalidInput, "--beta-band expects lo,hi");
      sv.constraints.beta_band = std::pair{band[0], band[1]};
    }
    if (s->polish) sv.polish_best = true;
    if (s->seeds) cfg.seeds = parse_seeds(*s->seeds);
  }
  return cfg;
}

// Data file when given; otherwise the documented synthetic universe, whose
// market volatility falls back to the synthetic default when unset.
Universe load_universe(const RunConfig& cfg) {
  if (!cfg.data_path.empty()) return ingest_universe(read_csv(cfg.data_path), cfg.market, cfg.units);
  SyntheticSpec spec;
  spec.n = cfg.synthetic_n;
  spec.seed = cfg.synthetic_seed;
  spec.market = {cfg.market.rf, cfg.market.erp, cfg.market.sigma_m.value_or(*spec.market.sigma_m)};
  return synthetic_universe(spec);
}

json audit_json(const Universe& u, const FactorCovariance& fc) {
  json audit = json::array();
  for (const auto& a : u.audit())
    audit.push_back({{"level", a.level == AuditEntry::Level::Warning ? "warning" : "info"}, {"message", a.message}});
  json clips = json::array();
  for (const auto& c : fc.clip_events()) clips.push_back({{"id", c.id}, {"index", c.index}, {"deficit", c.deficit}});
  return {{"audit", audit}, {"clip_events", clips}};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

int cmd_calibrate(const RunConfig& cfg) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  const auto gate = psd_gate(materialize_dense(fc));
  ArtifactBundle bundle;
  bundle.add_calibration(u, fc);
  json summary = {{"toolkit_version", kToolkitVersion},
                  {"n", u.size()},
                  {"market", market_to_json(u.market())},
                  {"units", to_string(cfg.units)},
                  {"data_path", cfg.data_path},
                  {"min_eigenvalue", gate.min_eig_before},
                  {"psd_jitter", gate.jitter}};
  summary.update(audit_json(u, fc));
  bundle.add_json("calibration.json", summary);
  bundle.write(cfg.output_dir);
  print(summary);
  return 0;
}

int cmd_solve(const RunConfig& cfg) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  const auto run = solve(cfg.method, u, fc, cfg.solver);
  const std::string name(to_string(cfg.method));
  export_artifacts(u, fc, {{name, run}}, cfg.output_dir, cfg);
  print(run_to_json(run, u));
  return 0;
}

int cmd_frontier(const RunConfig& cfg) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  SolverConfig sc = cfg.solver;
  sc.keep_log = true;
  const auto run = solve(cfg.method, u, fc, sc);
  std::ostringstream cloud;
  cloud << "sigma_p,mu_p,sharpe\n";
  for (const auto& r : run.log)
    cloud << format_full(r.sigma_p) << ',' << format_full(r.mu_p) << ',' << format_full(r.sharpe) << '\n';
  ArtifactBundle bundle;
  bundle.add("frontier_" + std::string(to_string(cfg.method)) + ".csv", cloud.str());
  bundle.add_run(std::string(to_string(cfg.method)), run, u);
  bundle.add_json("config.json", save_config(cfg));
  bundle.write(cfg.output_dir);
  print({{"method", to_string(cfg.method)},
         {"points", run.log.size()},
         {"best", evaluation_to_json("best", run.best, u, fc)},
         {"config", solver_config_to_json(run.config)}});
  return 0;
}

int cmd_diagnose(const RunConfig& cfg, const std::string& report, std::size_t top, const std::string& thresholds) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  ArtifactBundle bundle;
  if (report == "dependence") {
    const auto th = parse_list(thresholds, "--thresholds");
    const json j = dependence_to_json(dependence_report(fc, th));
    bundle.add_json("dependence.json", j);
    bundle.write(cfg.output_dir);
    print(j);
    return 0;
  }
  if (report != "cluster") fail(ErrorKind::InvalidInput, "--report must be dependence or cluster");

  const auto ids = asset_ids(u);
  const Eigen::MatrixXd rho = correlation_from_covariance(materialize_dense(fc), ids);
  std::optional<std::vector<std::size_t>> subset;
  if (top > 0) subset = top_by_firms(u, top);
  const auto c = cluster_order(rho, subset);

  std::vector<std::string> ordered_ids;
  Eigen::MatrixXd ordered(static_cast<Eigen::Index>(c.order.size()), static_cast<Eigen::Index>(c.order.size()));
  for (std::size_t a = 0; a < c.order.size(); ++a) {
    ordered_ids.push_back(ids[c.order[a]]);
    for (std::size_t b = 0; b < c.order.size(); ++b)
      ordered(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          rho(static_cast<Eigen::Index>(c.order[a]), static_cast<Eigen::Index>(c.order[b]));
  }
  std::ostringstream order_csv;
  order_csv << "position,index,id\n";
  for (std::size_t a = 0; a < c.order.size(); ++a)
    order_csv << a << ',' << c.order[a] << ',' << csv_escape(ordered_ids[a]) << '\n';

  json merges = json::array();
  for (const auto& m : c.merges)
    merges.push_back({{"left_min", m.left_min}, {"right_min", m.right_min}, {"distance", m.distance}, {"size", m.size}});
  const json j = {{"linkage", c.linkage}, {"distance", c.distance}, {"order", ordered_ids}, {"merges", merges}};
  bundle.add("cluster_order.csv", order_csv.str());
  bundle.add("rho_ordered.csv", matrix_csv(ordered, ordered_ids));
  bundle.add_json("cluster.json", j);
  bundle.write(cfg.output_dir);
  print(j);
  return 0;
}

// Option subcommands -------------------------------------------------------

struct OptionFlags {
  std::optional<std::string> underlying;
  std::optional<double> beta, sigma, vol;
  double s0 = 100.0, strike = 100.0, t = 0.5, bump = 0.01;
  std::string count_in_k = "true";
  std::optional<double> overlay_cap;
  std::string moneyness = "0.9,1.0,1.1";
  std::string maturities = "0.25,0.5,1.0";
};

void add_option_flags(CLI::App* app, OptionFlags& f) {
  app->add_option("--underlying", f.underlying, "Underlying asset id in the universe");
  app->add_option("--beta", f.beta, "Underlying beta (instead of --underlying)");
  app->add_option("--sigma", f.sigma, "Underlying volatility (instead of --underlying)");
  app->add_option("--vol", f.vol, "Pricing volatility; defaults to the underlying sigma");
  app->add_option("--s0", f.s0, "Spot");
  app->add_option("--strike", f.strike, "Strike");
  app->add_option("--t", f.t, "Maturity in years");
  app->add_option("--bump", f.bump, "Relative spot bump");
  app->add_option("--count-in-k", f.count_in_k, "Whether the option counts toward K");
  app->add_option("--overlay-cap", f.overlay_cap, "Weight cap for an overlay held outside K");
  app->add_option("--moneyness", f.moneyness, "Grid strike/spot ratios");
  app->add_option("--maturities", f.maturities, "Grid maturities in years");
}

struct Underlying {
  AssetRecord asset;
  std::optional<Universe> universe;
};

Underlying resolve_underlying(const RunConfig& cfg, const OptionFlags& o) {
  if (o.underlying) {
    auto u = load_universe(cfg);
    const auto idx = u.index_of(*o.underlying);
    if (!idx) fail(ErrorKind::InvalidInput, "unknown underlying '" + *o.underlying + "'");
    return {u.asset(*idx), std::move(u)};
  }
  if (!o.beta || !o.sigma) fail(ErrorKind::InvalidInput, "option commands need --underlying or both --beta and --sigma");
  AssetRecord a;
  a.id = "underlying";
  a.name = "underlying";
  a.beta = *o.beta;
  a.sigma = *o.sigma;
  return {a, std::nullopt};
}

json embedding_json(const OptionEmbedding& e) {
  json j = {{"underlying_id", e.underlying_id}, {"leverage", e.leverage},   {"beta_opt", e.beta_opt},
            {"sigma_opt", e.sigma_opt},         {"mu_opt", e.mu_opt},       {"counts_toward_k", e.counts_toward_k}};
  j["resid_var"] = e.resid_var ? json(*e.resid_var) : json(nullptr);
  return j;
}

std::vector<BumpRow> bump_rows(const OptionSpec& base, const std::vector<double>& moneyness,
                               const std::vector<double>& maturities, double bump) {
  std::vector<BumpRow> rows;
  for (double m : moneyness)
    for (double t : maturities) {
      OptionSpec s = base;
      s.strike = m * base.s0;
      s.maturity = t;
      rows.push_back({m, t, bump_test(s, bump)});
    }
  return rows;
}

int cmd_option(const std::string& action, const RunConfig& cfg, const OptionFlags& o) {
  cfg.market.validate();
  const auto und = resolve_underlying(cfg, o);
  const auto spec = OptionSpec::on(und.asset, o.s0, o.strike, o.t, cfg.market.rf, o.vol);
  spec.validate();
  ArtifactBundle bundle;

  if (action == "price") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto d = bs_call_price(spec);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto e = embed_with_leverage(d.leverage, und.asset, cfg.market);
    json j = {{"s0", spec.s0},       {"strike", spec.strike}, {"maturity", spec.maturity}, {"rate", spec.rate},
              {"vol", spec.vol},     {"price", d.price},      {"d1", d.d1},                {"d2", d.d2},
              {"delta", d.delta},    {"leverage", d.leverage}, {"embedding", embedding_json(e)},
              {"pricing_seconds", elapsed}};
    print(j);
    return 0;
  }
  if (action == "embed") {
    auto e = embed_option(spec, und.asset, cfg.market);
    e.counts_toward_k = parse_bool(o.count_in_k);
    json j = {{"contract", {{"s0", spec.s0}, {"strike", spec.strike}, {"maturity", spec.maturity}, {"vol", spec.vol}}},
              {"embedding", embedding_json(e)}};
    if (und.universe) {
      const auto fc = build_factor_covariance(*und.universe);
      const auto aug = augment_universe(*und.universe, fc, e, o.overlay_cap);
      bundle.add("inputs_augmented.csv", inputs_csv(aug.universe, &aug.fc));
      bundle.add("Sigma_augmented.csv", matrix_csv(materialize_dense(aug.fc), asset_ids(aug.universe)));
      j["option_index"] = aug.option_index;
      j["option_id"] = aug.universe.asset(aug.option_index).id;
      bundle.add_json("embedding.json", j);
      bundle.write(cfg.output_dir);
    }
    print(j);
    return 0;
  }
  const auto moneyness = parse_list(o.moneyness, "--moneyness");
  const auto maturities = parse_list(o.maturities, "--maturities");
  if (action == "grid") {
    const auto csv = option_grid_csv(option_grid(spec, moneyness, maturities, und.asset, cfg.market));
    bundle.add("option_grid.csv", csv);
    bundle.write(cfg.output_dir);
    std::cout << csv;
    return 0;
  }
  if (action == "bump") {
    const auto csv = bump_csv(bump_rows(spec, moneyness, maturities, o.bump));
    bundle.add("bump_test.csv", csv);
    bundle.write(cfg.output_dir);
    std::cout << csv;
    return 0;
  }
  fail(ErrorKind::InvalidInput, "unknown option action '" + action + "'");
}

// Experiment subcommands ---------------------------------------------------

std::vector<SensitivityScenario> parse_grid(const std::vector<std::string>& specs) {
  std::vector<SensitivityScenario> out{{"baseline", {}, std::nullopt}};
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidInput, "--grid expects key=v1,v2,..., got '" + spec + "'");
    const std::string key = detail::trim(spec.substr(0, eq));
    for (const auto& v : split(spec.substr(eq + 1), ',')) {
      SensitivityScenario s;
      s.name = key + "=" + v;
      if (key == "k") s.overrides.k = parse_uint(v, "--grid k");
      else if (key == "rf_shift") s.overrides.rf_shift = parse_double(v, "--grid rf_shift");
      else if (key == "erp_shift") s.overrides.erp_shift = parse_double(v, "--grid erp_shift");
      else if (key == "erp_scale") s.overrides.erp_scale = parse_double(v, "--grid erp_scale");
      else if (key == "cap") s.overrides.cap = parse_double(v, "--grid cap");
      else fail(ErrorKind::InvalidInput, "--grid: unknown key '" + key + "' (k, rf_shift, erp_shift, erp_scale, cap)");
      out.push_back(std::move(s));
    }
  }
  return out;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<std::string>& grid, unsigned threads) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  const auto result = sensitivity_sweep(u, fc, cfg.solver, parse_grid(grid), cfg.method, cfg.seeds, threads);
  json scenarios = json::array();
  for (const auto& s : result.scenarios)
    scenarios.push_back({{"name", s.name}, {"result", distribution_to_json(*s.result)}});
  const json j = {{"toolkit_version", kToolkitVersion},
                  {"config", save_config(cfg)},
                  {"scenarios", scenarios},
                  {"overlap", result.overlap}};
  ArtifactBundle bundle;
  bundle.add_json("sweep.json", j);
  bundle.add("sweep.csv", sweep_csv(result));
  bundle.write(cfg.output_dir);
  std::cout << sweep_csv(result);
  return 0;
}

int cmd_benchmark(const RunConfig& cfg, std::size_t n, std::size_t k) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  SolverConfig exact_cfg = cfg.solver;
  std::vector<HeuristicSpec> heuristics;
  for (auto m : {Method::Greedy, Method::MonteCarlo, Method::Genetic})
    heuristics.push_back({std::string(to_string(m)), m, cfg.solver});
  const auto b = exact_benchmark(u, fc, n, k, exact_cfg, heuristics);

  json rows = json::array();
  for (const auto& r : b.rows)
    rows.push_back({{"label", r.label}, {"sharpe", r.sharpe}, {"support", r.support}, {"gap_pct", r.gap_pct},
                    {"evaluations", r.evaluations}, {"wall_time", r.wall_time}, {"seed", r.seed}});
  const json j = {{"toolkit_version", kToolkitVersion},
                  {"config", save_config(cfg)},
                  {"n", b.n},
                  {"k", b.k},
                  {"subsets_visited", b.subsets_visited},
                  {"exact_sharpe", b.exact_sharpe},
                  {"exact_support", b.exact_support},
                  {"exact_wall_time", b.exact_wall_time},
                  {"heuristics", rows}};
  ArtifactBundle bundle;
  bundle.add_json("benchmark.json", j);
  bundle.add("benchmark.csv", benchmark_csv(b));
  bundle.write(cfg.output_dir);

  std::cout << "n: " << b.n << "\nk: " << b.k << "\nsubsets_visited: " << b.subsets_visited
            << "\nexact_sharpe: " << format_full(b.exact_sharpe) << "\nexact_support: " << support_tuple(b.exact_support)
            << '\n';
  for (const auto& r : b.rows)
    std::cout << r.label << ": sharpe " << format_full(r.sharpe) << ", gap_pct " << format_full(r.gap_pct) << '\n';
  return 0;
}

int cmd_profile(const RunConfig& cfg, const std::string& methods) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  std::vector<HeuristicSpec> entries;
  for (const auto& m : split(methods, ',')) {
    const auto method = parse_method(m);
    entries.push_back({std::string(to_string(method)), method, cfg.solver});
  }
  const auto p = runtime_profile(u, fc, entries, cfg.seeds);
  json rows = json::array();
  for (const auto& r : p.rows) rows.push_back({{"label", r.label}, {"distribution", distribution_to_json(r.distribution)}});
  const json j = {{"toolkit_version", kToolkitVersion},
                  {"environment", environment_to_json(p.environment)},
                  {"config", save_config(cfg)},
                  {"rows", rows}};
  ArtifactBundle bundle;
  bundle.add_json("profile.json", j);
  bundle.add("profile.csv", profile_csv(p));
  bundle.write(cfg.output_dir);
  std::cout << profile_csv(p);
  return 0;
}

int cmd_effort(const RunConfig& cfg, const std::string& budgets_text, unsigned threads) {
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  std::vector<Budget> budgets;
  for (const auto& b : split(budgets_text, ',')) {
    Budget budget;
    if (cfg.method == Method::Genetic) {
      const auto x = b.find('x');
      if (x == std::string::npos) fail(ErrorKind::InvalidInput, "GA budgets are PxG, e.g. 30x30");
      budget.population = parse_uint(b.substr(0, x), "--budgets");
      budget.generations = parse_uint(b.substr(x + 1), "--budgets");
    } else {
      budget.draws = parse_uint(b, "--budgets");
    }
    budgets.push_back(budget);
  }
  const auto rows = effort_grid(cfg.method, u, fc, cfg.solver, budgets, cfg.seeds, threads);
  const auto fit = runtime_scaling(rows, cfg.method);
  json jr = json::array();
  for (const auto& r : rows) jr.push_back({{"label", r.label}, {"distribution", distribution_to_json(r.distribution)}});
  const json j = {{"toolkit_version", kToolkitVersion},
                  {"config", save_config(cfg)},
                  {"rows", jr},
                  {"runtime_fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}}}};
  ArtifactBundle bundle;
  bundle.add_json("effort.json", j);
  bundle.add("effort.csv", effort_csv(cfg.method, rows));
  bundle.write(cfg.output_dir);
  std::cout << effort_csv(cfg.method, rows);
  return 0;
}

int cmd_export(const RunConfig& cfg, const std::string& methods, bool verify) {
  if (verify) {
    const auto changed = verify_manifest(cfg.output_dir);
    print({{"directory", cfg.output_dir}, {"changed", changed}});
    if (!changed.empty()) fail(ErrorKind::Io, std::to_string(changed.size()) + " file(s) no longer match the manifest");
    return 0;
  }
  const auto u = load_universe(cfg);
  const auto fc = build_factor_covariance(u);
  std::vector<std::pair<std::string, SolverRun>> runs;
  for (const auto& m : split(methods, ',')) {
    const auto method = parse_method(m);
    runs.emplace_back(std::string(to_string(method)), solve(method, u, fc, cfg.solver));
  }
  print(export_artifacts(u, fc, runs, cfg.output_dir, cfg).to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardinality-constrained portfolio selection toolkit", "cardsel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  CommonFlags common;
  SolverFlags solver;
  OptionFlags opt;
  std::string report = "dependence", thresholds = "0.5", methods = "greedy,mc,ga", export_methods, budgets;
  std::size_t top = 0, bench_n = 20, bench_k = 6;
  std::vector<std::string> grid;
  bool verify = false;

  auto* calibrate = app.add_subcommand("calibrate", "Ingest a universe and write Sigma, rho and inputs tables");
  auto* solve_cmd = app.add_subcommand("solve", "Run one solver and write its run record");
  auto* frontier = app.add_subcommand("frontier", "Emit the (sigma, mu, Sharpe) point cloud of a run");
  auto* diagnose = app.add_subcommand("diagnose", "Dependence report or correlation clustering");
  auto* option = app.add_subcommand("option", "Option pricing, embedding, grid and bump test");
  auto* bump = app.add_subcommand("bump", "Delta-linearization bump test over a grid");
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over K, market and cap scenarios");
  auto* benchmark = app.add_subcommand("benchmark", "Heuristics versus exact enumeration on a reduced instance");
  auto* profile = app.add_subcommand("profile", "Runtime profile of several methods");
  auto* effort = app.add_subcommand("effort", "Effort grid and runtime scaling fit");
  auto* export_cmd = app.add_subcommand("export", "Write the calibration bundle and optional runs with a manifest");

  for (auto* c : {calibrate, solve_cmd, frontier, diagnose, bump, sweep, benchmark, profile, effort, export_cmd})
    add_common(c, common);
  for (auto* c : {solve_cmd, frontier, sweep, benchmark, profile, effort, export_cmd}) add_solver(c, solver);

  diagnose->add_option("--report", report, "dependence|cluster");
  diagnose->add_option("--top-by-firms", top, "Restrict clustering to the largest industries");
  diagnose->add_option("--thresholds", thresholds, "Correlation thresholds for the share-above statistics");

  option->require_subcommand(1);
  std::string option_action;
  for (const char* action : {"price", "embed", "grid", "bump"}) {
    auto* sub = option->add_subcommand(action);
    add_common(sub, common);
    add_option_flags(sub, opt);
    sub->callback([&option_action, action] { option_action = action; });
  }
  add_option_flags(bump, opt);

  sweep->add_option("--grid", grid, "Scenario axis key=v1,v2,... (repeatable)");
  benchmark->add_option("--n", bench_n, "Reduced instance size (first n assets)");
  profile->add_option("--methods", methods, "Comma-separated methods");
  effort->add_option("--budgets", budgets, "MC draws (500,5000) or GA PxG (10x10,30x30)")->required();
  export_cmd->add_option("--methods", export_methods, "Runs to include (comma-separated methods)");
  export_cmd->add_flag("--verify", verify, "Re-hash the files listed in --out/manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*calibrate) return cmd_calibrate(resolve_config(common, nullptr));
    if (*solve_cmd) return cmd_solve(resolve_config(common, &solver));
    if (*frontier) return cmd_frontier(resolve_config(common, &solver));
    if (*diagnose) return cmd_diagnose(resolve_config(common, nullptr), report, top, thresholds);
    if (*option) return cmd_option(option_action, resolve_config(common, nullptr), opt);
    if (*bump) return cmd_option("bump", resolve_config(common, nullptr), opt);
    if (*sweep) return cmd_sweep(resolve_config(common, &solver), grid, solver.threads);
    if (*benchmark) {
      auto cfg = resolve_config(common, &solver);
      // The benchmark's --k sets the cardinality of the reduced instance.
      if (solver.k) bench_k = *solver.k;
      cfg.solver.constraints.k = bench_k;
      return cmd_benchmark(cfg, bench_n, bench_k);
    }
    if (*profile) return cmd_profile(resolve_config(common, &solver), methods);
    if (*effort) return cmd_effort(resolve_config(common, &solver), budgets, solver.threads);
    if (*export_cmd) return cmd_export(resolve_config(common, &solver), export_methods, verify);
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return exit_code(ErrorKind::Internal);
  }
  return 0;
}

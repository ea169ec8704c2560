#pragma once

// Runs the checks named in a config and writes report.json plus tables/*.csv.

#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "volterra/analysis.hpp"
#include "volterra/io/config.hpp"
#include "volterra/io/csv.hpp"

namespace volterra::io {

inline constexpr int kSchemaVersion = 1;

struct CheckResult {
  std::string name;
  bool pass = false;
  json summary;
  std::vector<std::pair<std::string, Table>> tables;  // file stem -> table
};

struct ExperimentResult {
  json report;
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

struct RunContext {
  GridConfig grid;  // possibly with the truncation chosen by the budget
  std::optional<TruncationBudget> budget;
};

namespace detail {

inline double default_epsilon(const ExperimentConfig& c) {
  if (c.epsilon) return *c.epsilon;
  if (const auto d = fractional_order(c.kernel_spec))
    if (const auto e = admissible_epsilon_fractional(*d, c.q)) return 0.5 * *e;
  return 0.1;
}

inline std::vector<double> log_spaced(double lo_exp10, double hi_exp10, int per_decade) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((hi_exp10 - lo_exp10) * per_decade));
  for (int i = 0; i <= n; ++i) out.push_back(std::pow(10.0, lo_exp10 + static_cast<double>(i) / per_decade));
  return out;
}

inline std::vector<double> powers_of_two(int lo, int hi) {
  std::vector<double> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

inline json norm_json(const SupMomentEstimate& e) {
  return {{"T", e.T}, {"estimate", e.estimate}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

// A budget that cannot be met on its own ladder is reported, and the run
// carries on with the configured truncation.
inline TruncationBudget compute_budget(const ExperimentConfig& c, double tolerance) {
  const WeightFunction w(c.q);
  MonteCarlo mc = c.mc;
  mc.n_paths = std::min<std::size_t>(c.mc.n_paths, 200);
  mc.seed = derive_seed(c.mc.seed, 0xb4d6e7);
  const double range = std::ldexp(1.0, 10);
  const auto ws = weighted_sup_estimate(c.model, w, range, c.horizon(), std::max(c.p, 1.0 + 1e-9), 0.25, mc, 20);
  const double sup = ws.lhs.estimate + 2.0 * ws.lhs.std_error;
  return choose_truncation(c.kernel, w, sup, tolerance, functional_grid(c.horizon(), 9));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual checks

inline CheckResult check_kernel_class(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"kernel_class"};
  const WeightFunction w(c.q);
  const double eps = detail::default_epsilon(c);
  const auto tg = functional_grid(c.horizon(), 9);
  // four decades starting at the horizon, so the table sees the far tail for any T
  auto s_values = detail::log_spaced(0.0, 4.0, 4);
  for (double& s : s_values) s *= std::max(1.0, c.horizon());
  const auto ladder = default_truncation_ladder();
  const auto rep = certify_kernel_class(c.kernel, w, eps, tg, s_values, ladder);
  r.pass = rep.verdict == Verdict::pass;
  r.summary = {{"kernel", c.kernel.name()},
               {"q", c.q},
               {"epsilon", eps},
               {"verdict", to_string(rep.verdict)},
               {"decay_verdict", to_string(rep.decay.verdict)},
               {"decay_slope_per_decade", rep.decay.fitted_slope},
               {"decay_final_value", rep.decay.final_value},
               {"integrability_verdict", to_string(rep.integrability.verdict())},
               {"integrability_diagnostic", rep.integrability.assessment.diagnostic},
               {"warnings", rep.warnings}};
  Table decay{{"s", "max_t_weighted_value"}, {}};
  for (const auto& row : rep.decay.table) decay.add_numbers(row.s, row.g);
  Table integ{{"N", "sup_t_integral"}, {}};
  for (std::size_t i = 0; i < rep.integrability.truncations.size(); ++i)
    integ.add_numbers(rep.integrability.truncations[i], rep.integrability.sup_integral[i]);
  r.tables = {{"kernel_decay", decay}, {"kernel_integrability", integ}};
  return r;
}

inline CheckResult check_kernel_consistency(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"kernel_consistency"};
  std::vector<IncrementSample> samples;
  for (double t : {0.5, 1.0, c.horizon()}) {
    for (auto [a, b] : std::initializer_list<std::pair<double, double>>{
             {-1000.0, -10.0}, {-2.0, -1.0}, {-0.5, 0.5 * t}, {0.25 * t, t}, {-1.0, t}}) {
      a = std::max(a, c.kernel.tau());
      if (a < b && b <= t) samples.push_back({t, a, b});
    }
  }
  const auto rep = consistency_check(c.kernel, samples);
  r.pass = rep.pass;
  r.summary = {{"samples", samples.size()},
               {"max_abs_discrepancy", rep.max_abs_discrepancy},
               {"max_rel_discrepancy", rep.max_rel_discrepancy},
               {"tolerance", rep.tolerance}};
  Table t{{"t", "a", "b", "increment"}, {}};
  for (const auto& s : samples) t.add_numbers(s.t, s.a, s.b, c.kernel.increment(s.t, s.a, s.b));
  r.tables = {{"kernel_consistency", t}};
  return r;
}

inline CheckResult check_truncation_budget(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"truncation_budget"};
  const double tolerance = c.auto_tolerance.value_or(0.05);
  const TruncationBudget b = ctx.budget ? *ctx.budget : detail::compute_budget(c, tolerance);
  r.pass = b.met;
  r.summary = {{"tolerance", tolerance},
               {"weighted_sup", b.weighted_sup},
               {"N", b.N},
               {"tail_bound", b.tail_bound},
               {"met", b.met},
               {"truncation_in_use", ctx.grid.truncation}};
  if (!b.met) r.summary["warning"] = "tolerance not met on the ladder up to 2^20";
  Table t{{"N", "tail_bound"}, {}};
  for (const auto& rung : b.ladder) t.add_numbers(rung.N, rung.tail_bound);
  r.tables = {{"truncation_budget", t}};
  return r;
}

inline CheckResult check_sampler_validation(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"sampler_validation"};
  const std::vector<double> u{0.25, 0.5, 1.0, 2.0, 4.0};
  const auto n = std::max<std::size_t>(c.mc.n_paths, 1000);
  const auto rep = validate_sampler(c.model, u, n, derive_seed(c.mc.seed, 0x5a), c.mc.workers);
  r.pass = rep.within(4.0);
  r.summary = {{"n_paths", n}, {"max_deviation", rep.max_deviation}, {"max_z", rep.max_z}, {"sigma_limit", 4.0}};
  Table t{{"u", "empirical_re", "empirical_im", "theoretical_re", "theoretical_im", "deviation", "std_error"}, {}};
  for (const auto& row : rep.rows)
    t.add_numbers(row.u, row.empirical.real(), row.empirical.imag(), row.theoretical.real(), row.theoretical.imag(),
                  row.deviation, row.std_error);
  r.tables = {{"sampler_validation", t}};
  return r;
}

inline CheckResult check_jump_relation(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"jump_relation"};
  const auto n = std::min<std::size_t>(c.mc.n_paths, 20);
  const auto rep = jump_relation_check(c.model, c.kernel, c.horizon(), ctx.grid, n, derive_seed(c.mc.seed, 0x7a));
  r.pass = rep.pass;
  r.summary = {{"paths", n},
               {"jumps", rep.jumps},
               {"max_discrepancy", rep.max_discrepancy},
               {"max_relative_discrepancy", rep.max_relative_discrepancy},
               {"absolute_tolerance", 1e-8},
               {"relative_tolerance", 1e-3}};
  if (rep.jumps == 0) r.summary["note"] = "driver has no isolated jumps; relation holds vacuously";
  Table t{{"path", "time", "driver_jump", "path_jump", "predicted", "discrepancy"}, {}};
  for (std::size_t i = 0; i < rep.paths.size(); ++i)
    for (const auto& row : rep.paths[i].rows)
      t.add_numbers(static_cast<double>(i), row.time, row.driver_jump, row.path_jump, row.predicted, row.discrepancy);
  r.tables = {{"jump_relation", t}};
  return r;
}

inline CheckResult check_cross_method(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"cross_method"};
  const double T = c.horizon();
  const double s = ctx.grid.step_for(T);
  const std::vector<double> steps{s, s / 2.0, s / 4.0};
  const auto n = std::min<std::size_t>(c.mc.n_paths, 100);
  const auto rep = cross_method_check(c.model, c.kernel, T, ctx.grid, steps, n, derive_seed(c.mc.seed, 0xc3),
                                      c.mc.workers, c.cross_method_tolerance);
  r.pass = rep.pass;
  r.summary = {{"paths", n},
               {"decreasing", rep.decreasing},
               {"finest_ratio", rep.levels.back().ratio},
               {"tolerance", rep.tolerance}};
  Table t{{"step", "mean_sup_difference", "mean_sup_path", "ratio", "worst_ratio"}, {}};
  for (const auto& lv : rep.levels)
    t.add_numbers(lv.step, lv.mean_sup_difference, lv.mean_sup_path, lv.ratio, lv.worst_ratio);
  r.tables = {{"cross_method", t}};
  return r;
}

inline CheckResult check_weighted_sup_lemma(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"weighted_sup_lemma"};
  const double T = c.horizon();
  const auto rep = weighted_sup_estimate(c.model, WeightFunction(c.q), ctx.grid.truncation_for(T), T, c.p,
                                         ctx.grid.step_for(T), c.mc, 20);
  r.pass = rep.pass;
  r.summary = {{"lhs", rep.lhs.estimate},
               {"lhs_std_error", rep.lhs.std_error},
               {"x1_norm", rep.x1_norm},
               {"series", rep.series.value},
               {"rhs", rep.vacuous ? json("inf") : json(rep.rhs)},
               {"vacuous", rep.vacuous}};
  return r;
}

inline CheckResult check_dyadic_series(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"dyadic_series"};
  const auto s = dyadic_series(c.model, WeightFunction(c.q), c.p, 20, c.mc);
  bool agree = true;
  Table t{{"n", "norm", "std_error", "term", "analytic_term", "partial_sum"}, {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& term : s.terms) {
    if (term.analytic_term) {
      const double se = term.std_error / std::max(std::pow(std::ldexp(1.0, term.n), c.q), 1.0);
      if (std::abs(term.term - *term.analytic_term) > 4.0 * se + 1e-12) agree = false;
    }
    t.add_numbers(term.n, term.norm, term.std_error, term.term, term.analytic_term.value_or(nan), term.partial_sum);
  }
  // Without a finite 2p-th moment the standard errors mean little (and
  // median-of-means is biased low), so agreement is reported, not required.
  const bool gated = c.model.has_moment(2.0 * c.p);
  r.pass = s.convergent && (agree || !gated);
  r.summary = {{"convergent", s.convergent},
               {"agreement_required", gated},
               {"analytic_ratio", s.analytic_ratio},
               {"tail_bound", s.convergent ? json(s.tail_bound) : json("inf")},
               {"value", s.convergent ? json(s.value) : json("inf")},
               {"terms_agree_with_closed_form", agree}};
  r.tables = {{"dyadic_series", t}};
  return r;
}

inline CheckResult check_moment_growth(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"moment_growth"};
  const auto t_values = detail::powers_of_two(0, 8);
  const auto rep = moment_growth_check(c.model, c.p, t_values, c.mc);
  r.pass = rep.pass;
  r.summary = {{"exponent", rep.exponent},
               {"exponent_limit", rep.exponent_limit},
               {"r_spread", rep.r_spread},
               {"spread_limit", rep.spread_limit}};
  Table t{{"t", "moment", "std_error", "r"}, {}};
  for (const auto& row : rep.rows) t.add_numbers(row.t, row.moment, row.std_error, row.r);
  r.tables = {{"moment_growth", t}};
  return r;
}

inline CheckResult check_self_similarity(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"self_similarity"};
  const std::vector<double> t_values{1.0, 2.0, 4.0, 8.0};
  // single increments are cheap; a spread tolerance of a few percent needs many
  MonteCarlo mc = c.mc;
  mc.n_paths = std::max<std::size_t>(c.mc.n_paths, 20000);
  const auto rep = self_similarity_check(c.model, c.p, t_values, mc);
  r.pass = rep.relative_spread <= c.self_similarity_tolerance;
  r.summary = {{"index", rep.index},
               {"draws", mc.n_paths},
               {"relative_spread", rep.relative_spread},
               {"tolerance", c.self_similarity_tolerance},
               {"max_over_min", rep.max_over_min},
               {"statistical_margin", rep.margin},
               {"within_margin", rep.within_margin}};
  Table t{{"t", "norm", "std_error", "ratio", "ratio_std_error"}, {}};
  for (const auto& row : rep.rows) t.add_numbers(row.t, row.norm.estimate, row.norm.std_error, row.ratio, row.ratio_std_error);
  r.tables = {{"self_similarity", t}};
  return r;
}

inline CheckResult check_maximal_general(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"maximal_inequality_general"};
  r.pass = true;
  Table t{{"T", "lhs", "lhs_std_error", "diagonal", "boundary", "density_integral", "rhs", "lhs_over_rhs"}, {}};
  json rows = json::array();
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < c.T_values.size(); ++i) {
    MonteCarlo mc = c.mc;
    mc.seed = derive_seed(c.mc.seed, 0x400 + i);
    const auto rep = rhs_general(c.model, c.kernel, WeightFunction(c.q), c.p, c.T_values[i], ctx.grid, mc);
    r.pass = r.pass && rep.pass;
    t.add_numbers(c.T_values[i], rep.lhs.estimate, rep.lhs.std_error, rep.rhs_terms[0].value, rep.rhs_terms[1].value,
                  rep.rhs_terms[2].value, rep.rhs_total, rep.empirical_ratio);
    rows.push_back({{"T", c.T_values[i]}, {"pass", rep.pass}, {"lhs_over_rhs", rep.empirical_ratio}});
    warnings.insert(warnings.end(), rep.warnings.begin(), rep.warnings.end());
  }
  r.summary = {{"rows", rows}, {"warnings", warnings}};
  r.tables = {{"maximal_inequality_general", t}};
  return r;
}

inline CheckResult growth_result(const std::string& name, const GrowthReport& rep) {
  CheckResult r{name};
  r.pass = rep.pass;
  r.summary = {{"calibrated_constant", rep.calibrated_constant}, {"l1_norm", rep.l1_norm}};
  Table t{{"T", "lhs", "lhs_std_error", "bracket", "lhs_ratio", "bracket_ratio", "allowed"}, {}};
  for (const auto& row : rep.rows)
    t.add_numbers(row.T, row.lhs.estimate, row.lhs.std_error, row.bracket, row.lhs_ratio, row.bracket_ratio, row.allowed);
  r.tables = {{name, t}};
  return r;
}

inline CheckResult check_maximal_levy(const ExperimentConfig& c, RunContext& ctx) {
  return growth_result("maximal_inequality_levy", rhs_levy(c.model, c.kernel, c.p, c.q, c.T_values, ctx.grid, c.mc));
}

inline CheckResult check_maximal_stable(const ExperimentConfig& c, RunContext& ctx) {
  return growth_result("maximal_inequality_stable", rhs_stable(c.model, c.kernel, c.p, c.q, c.T_values, ctx.grid, c.mc));
}

inline CheckResult check_second_moment(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"second_moment_scaling"};
  const auto d = fractional_order(c.kernel_spec);
  if (!d) throw ConfigError("second_moment_scaling needs a fractional kernel");
  const auto rep = second_moment_scaling_check(c.model, *d, c.T_values, ctx.grid, c.mc);
  r.pass = rep.pass;
  r.summary = {{"d", rep.d},
               {"oracle", rep.oracle},
               {"truncated_oracle", rep.truncated_oracle},
               {"oracle_relative_error", rep.oracle_relative_error},
               {"ratios_constant", rep.ratios_constant},
               {"oracle_match", rep.oracle_match}};
  Table t{{"T", "second_moment", "std_error", "ratio", "ratio_std_error"}, {}};
  for (const auto& row : rep.rows) t.add_numbers(row.T, row.second_moment, row.std_error, row.ratio, row.ratio_std_error);
  r.tables = {{"second_moment_scaling", t}};
  return r;
}

inline CheckResult check_scaling_window(const ExperimentConfig& c, RunContext& ctx) {
  CheckResult r{"scaling_window"};
  std::pair<double, double> window;
  if (c.window) {
    window = *c.window;
  } else if (const auto d = fractional_order(c.kernel_spec)) {
    window = {*d + 0.5, *d + c.q};
  } else {
    throw ConfigError("scaling_window needs a 'window' unless the kernel is fractional");
  }
  const auto fit = scaling_fit(c.model, c.kernel, c.p, c.T_values, ctx.grid, c.mc, window);
  r.pass = fit.pass;
  r.summary = {{"fitted_exponent", fit.fitted_exponent},
               {"ci_low", fit.exponent_ci.first},
               {"ci_high", fit.exponent_ci.second},
               {"window_low", window.first},
               {"window_high", window.second},
               {"degenerate", fit.degenerate}};
  Table t{{"T", "lhs", "lhs_std_error"}, {}};
  for (std::size_t i = 0; i < fit.lhs_values.size(); ++i)
    t.add_numbers(fit.T_values[i], fit.lhs_values[i], fit.lhs_std_errors[i]);
  r.tables = {{"scaling_window", t}};
  return r;
}

inline CheckResult check_stable_integrability(const ExperimentConfig& c, RunContext&) {
  CheckResult r{"stable_integrability"};
  const auto* st = c.model.stable_part();
  if (!st) throw ConfigError("stable_integrability needs a stable model");
  const double A = stable_levy_density_constant(st->alpha, st->scale);
  const auto tg = functional_grid(c.horizon(), 5);
  const auto ladder = default_truncation_ladder();
  const auto rep = stable_integrability_check(c.kernel, st->alpha, A, c.p, c.q, c.gamma, tg, ladder);
  r.pass = rep.assessment.verdict == Verdict::pass;
  r.summary = {{"alpha", rep.alpha},
               {"A", rep.A},
               {"q", rep.q},
               {"gamma", rep.gamma ? json(*rep.gamma) : json(nullptr)},
               {"envelope_constant", rep.envelope_constant},
               {"verdict", to_string(rep.assessment.verdict)},
               {"exact_verdict", to_string(rep.exact_assessment.verdict)},
               {"diagnostic", rep.diagnostic.empty() ? rep.assessment.diagnostic : rep.diagnostic}};
  Table t{{"N", "exact", "envelope"}, {}};
  for (std::size_t i = 0; i < rep.truncations.size(); ++i) t.add_numbers(rep.truncations[i], rep.exact[i], rep.envelope[i]);
  r.tables = {{"stable_integrability", t}};
  return r;
}

using CheckFn = std::function<CheckResult(const ExperimentConfig&, RunContext&)>;

inline const std::map<std::string, CheckFn>& check_functions() {
  static const std::map<std::string, CheckFn> fns = {
      {"kernel_class", check_kernel_class},
      {"kernel_consistency", check_kernel_consistency},
      {"truncation_budget", check_truncation_budget},
      {"sampler_validation", check_sampler_validation},
      {"jump_relation", check_jump_relation},
      {"cross_method", check_cross_method},
      {"weighted_sup_lemma", check_weighted_sup_lemma},
      {"dyadic_series", check_dyadic_series},
      {"moment_growth", check_moment_growth},
      {"self_similarity", check_self_similarity},
      {"maximal_inequality_general", check_maximal_general},
      {"maximal_inequality_levy", check_maximal_levy},
      {"maximal_inequality_stable", check_maximal_stable},
      {"second_moment_scaling", check_second_moment},
      {"scaling_window", check_scaling_window},
      {"stable_integrability", check_stable_integrability},
  };
  return fns;
}

// ---------------------------------------------------------------------------

/// Runs every configured check in registry order. Errors that come from the
/// combination of settings (a check that does not apply to the model, say)
/// surface as ConfigError.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  RunContext ctx;
  ctx.grid = c.grid;
  if (c.auto_tolerance) {
    ctx.budget = detail::compute_budget(c, *c.auto_tolerance);
    if (ctx.budget->met) {
      ctx.grid.truncation = ctx.budget->N;
      ctx.grid.relative_to_T = false;
    }
  }
  ExperimentResult out;
  json checks = json::array();
  for (const auto& name : c.checks) {
    CheckResult res;
    try {
      res = check_functions().at(name)(c, ctx);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(name + ": " + e.what());
    }
    out.all_pass = out.all_pass && res.pass;
    json entry = {{"name", res.name}, {"pass", res.pass}, {"summary", res.summary}, {"tables", json::array()}};
    for (const auto& [stem, _] : res.tables) entry["tables"].push_back("tables/" + stem + ".csv");
    checks.push_back(entry);
    out.checks.push_back(std::move(res));
  }
  out.report = {{"schema_version", kSchemaVersion},
                {"config", c.raw},
                {"config_hash", config_hash(c.raw)},
                {"seed", c.mc.seed},
                {"truncation", ctx.grid.truncation},
                {"checks", checks},
                {"all_pass", out.all_pass}};
  return out;
}

inline void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tables");
  for (const auto& check : res.checks)
    for (const auto& [stem, table] : check.tables) write_csv_file((dir / "tables" / (stem + ".csv")).string(), table);
  std::ofstream os(dir / "report.json", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  os << res.report.dump(2) << '\n';
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace volterra::io

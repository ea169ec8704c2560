#pragma once

// JSON experiment configs: parsing, validation and a stable hash.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "volterra/analysis.hpp"
#include "volterra/kernels.hpp"
#include "volterra/levy.hpp"

namespace volterra::io {

using nlohmann::json;

/// Anything wrong with the config itself (maps to exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Registry order is also execution order: later checks may use results of
/// earlier ones (the truncation budget feeds the grid when asked to).
inline const std::vector<std::pair<std::string, std::string>>& check_registry() {
  static const std::vector<std::pair<std::string, std::string>> reg = {
      {"kernel_class", "decay and density-integrability ladder of the kernel under the weight (|s|^q v 1)"},
      {"kernel_consistency", "kernel increments against quadrature of the analytic density"},
      {"truncation_budget", "smallest truncation N whose kernel-tail bound meets the tolerance"},
      {"sampler_validation", "empirical characteristic function of L(1) against exp(Psi(u))"},
      {"jump_relation", "jumps of M against f(t,t) times the driver's jumps"},
      {"cross_method", "integration-by-parts and direct construction agree as the step shrinks"},
      {"weighted_sup_lemma", "weighted sup of the two-sided driver against the dyadic bound"},
      {"dyadic_series", "dyadic series of increment norms, Monte Carlo against closed forms"},
      {"moment_growth", "E|L(t)|^p grows no faster than t^{p/2} for finite-variance drivers"},
      {"self_similarity", "||L(t)||_p / t^{1/alpha} is flat in t"},
      {"maximal_inequality_general", "Monte Carlo sup-norm against the explicit-constant right-hand side"},
      {"maximal_inequality_levy", "sup-norm growth in T against the finite-variance bracket"},
      {"maximal_inequality_stable", "sup-norm growth in T against the stable bracket"},
      {"second_moment_scaling", "E M_d(T)^2 / T^{2d+1} flat in T and equal to the L2 oracle"},
      {"scaling_window", "fitted exponent of ||sup M||_p in T against the predicted window"},
      {"stable_integrability", "integrability condition of the kernel for a stable driver"},
  };
  return reg;
}

inline bool is_known_check(const std::string& name) {
  for (const auto& [n, _] : check_registry())
    if (n == name) return true;
  return false;
}

struct ExperimentConfig {
  json raw;  // as given, echoed into the report
  LevyModel model;
  json kernel_spec;
  Kernel kernel = Kernel::zero();
  double p = 2.0;
  double q = 0.6;
  std::optional<double> epsilon;
  std::vector<double> T_values{1.0};
  GridConfig grid;
  std::optional<double> auto_tolerance;  // choose N from the truncation budget
  MonteCarlo mc;
  std::vector<std::string> checks;
  std::string output_dir = "out";
  double cross_method_tolerance = 1e-2;
  double self_similarity_tolerance = 0.10;
  std::optional<std::pair<double, double>> window;
  std::optional<double> gamma;

  double horizon() const { return T_values.back(); }
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  if (!j.at(key).is_number()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

// JSON integers written as literals are stored signed; accept either form.
inline std::uint64_t count(const json& j, const char* key, const std::string& what) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(what + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::string kind_of(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(where + " needs a string 'kind'");
  return j.at("kind").get<std::string>();
}

}  // namespace detail

inline JumpDistribution parse_jump_distribution(const json& j) {
  const std::string where = "jump distribution";
  const std::string kind = detail::kind_of(j, where);
  if (kind == "normal") {
    detail::reject_unknown(j, {"kind", "mean", "sd"}, where);
    return NormalJumps{detail::number_or(j, "mean", 0.0, where), detail::number_or(j, "sd", 1.0, where)};
  }
  if (kind == "two_point") {
    detail::reject_unknown(j, {"kind", "magnitude"}, where);
    return TwoPointJumps{detail::number(j, "magnitude", where)};
  }
  if (kind == "uniform") {
    detail::reject_unknown(j, {"kind", "lower", "upper"}, where);
    return UniformJumps{detail::number(j, "lower", where), detail::number(j, "upper", where)};
  }
  throw ConfigError("unknown jump distribution kind '" + kind + "'");
}

/// {"sigma": s, "jumps": {"kind": "none" | "compound_poisson" | "stable", ...}}
inline LevyModel parse_model(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be an object");
  detail::reject_unknown(j, {"sigma", "jumps"}, "model");
  const double sigma = detail::number_or(j, "sigma", 0.0, "model");
  const json jumps = j.value("jumps", json{{"kind", "none"}});
  const std::string kind = detail::kind_of(jumps, "model.jumps");
  try {
    if (kind == "none") {
      detail::reject_unknown(jumps, {"kind"}, "model.jumps");
      return LevyModel(sigma, NoJumps{});
    }
    if (kind == "compound_poisson") {
      detail::reject_unknown(jumps, {"kind", "rate", "distribution"}, "model.jumps");
      if (!jumps.contains("distribution")) throw ConfigError("compound_poisson needs a 'distribution'");
      return LevyModel::compound_poisson(sigma, detail::number(jumps, "rate", "model.jumps"),
                                         parse_jump_distribution(jumps.at("distribution")));
    }
    if (kind == "stable") {
      detail::reject_unknown(jumps, {"kind", "alpha", "scale"}, "model.jumps");
      return LevyModel(sigma, SymmetricStable{detail::number(jumps, "alpha", "model.jumps"),
                                              detail::number_or(jumps, "scale", 1.0, "model.jumps")});
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  throw ConfigError("unknown jumps kind '" + kind + "'");
}

/// {"kind": "zero" | "fractional" | "exponential" | "indicator" | "shifted_support", ...}
inline Kernel parse_kernel(const json& j) {
  const std::string kind = detail::kind_of(j, "kernel");
  try {
    if (kind == "zero") {
      detail::reject_unknown(j, {"kind"}, "kernel");
      return Kernel::zero();
    }
    if (kind == "fractional") {
      detail::reject_unknown(j, {"kind", "d"}, "kernel");
      return Kernel::fractional(detail::number(j, "d", "kernel"));
    }
    if (kind == "exponential") {
      detail::reject_unknown(j, {"kind", "rate"}, "kernel");
      return Kernel::exponential(detail::number_or(j, "rate", 1.0, "kernel"));
    }
    if (kind == "indicator") {
      detail::reject_unknown(j, {"kind"}, "kernel");
      return Kernel::indicator();
    }
    if (kind == "shifted_support") {
      detail::reject_unknown(j, {"kind", "tau", "base"}, "kernel");
      if (!j.contains("base")) throw ConfigError("shifted_support needs a 'base' kernel");
      return Kernel::shifted_support(parse_kernel(j.at("base")), detail::number(j, "tau", "kernel"));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  throw ConfigError("unknown kernel kind '" + kind + "'");
}

/// d of a plain fractional kernel spec.
inline std::optional<double> fractional_order(const json& kernel_spec) {
  if (kernel_spec.value("kind", "") == "fractional") return kernel_spec.at("d").get<double>();
  return std::nullopt;
}

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j,
                         {"model", "kernel", "p", "q", "epsilon", "T", "T_values", "grid", "n_paths", "seed", "workers",
                          "estimator", "checks", "output_dir", "cross_method_tolerance", "self_similarity_tolerance",
                          "window", "gamma"},
                         "config");
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("model")) throw ConfigError("config needs a 'model'");
  c.model = parse_model(j.at("model"));
  c.kernel_spec = j.value("kernel", json{{"kind", "fractional"}, {"d", 0.25}});
  c.kernel = parse_kernel(c.kernel_spec);

  c.p = detail::number_or(j, "p", 2.0, "config");
  c.q = detail::number_or(j, "q", 0.6, "config");
  if (!(c.q >= 0.0)) throw ConfigError("q must be nonnegative");
  if (j.contains("epsilon")) {
    c.epsilon = detail::number(j, "epsilon", "config");
    if (!(*c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  }
  try {
    require_admissible_p(c.model, c.p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("T") && j.contains("T_values")) throw ConfigError("give either 'T' or 'T_values', not both");
  if (j.contains("T")) c.T_values = {detail::number(j, "T", "config")};
  if (j.contains("T_values")) {
    if (!j.at("T_values").is_array() || j.at("T_values").empty()) throw ConfigError("T_values must be a nonempty array");
    c.T_values.clear();
    for (const auto& v : j.at("T_values")) {
      if (!v.is_number()) throw ConfigError("T_values must hold numbers");
      c.T_values.push_back(v.get<double>());
    }
  }
  for (std::size_t i = 0; i < c.T_values.size(); ++i) {
    if (!(c.T_values[i] > 0.0)) throw ConfigError("horizons must be positive");
    if (i && !(c.T_values[i] > c.T_values[i - 1])) throw ConfigError("T_values must be increasing");
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (!g.is_object()) throw ConfigError("grid must be an object");
    detail::reject_unknown(g, {"step", "truncation", "relative_to_T", "auto_tolerance"}, "grid");
    c.grid.step = detail::number_or(g, "step", c.grid.step, "grid");
    c.grid.truncation = detail::number_or(g, "truncation", c.grid.truncation, "grid");
    c.grid.relative_to_T = g.value("relative_to_T", false);
    if (g.contains("auto_tolerance")) {
      c.auto_tolerance = detail::number(g, "auto_tolerance", "grid");
      if (!(*c.auto_tolerance > 0.0)) throw ConfigError("auto_tolerance must be positive");
    }
  }
  if (!(c.grid.step > 0.0) || !(c.grid.truncation > 0.0)) throw ConfigError("grid step and truncation must be positive");

  if (j.contains("n_paths")) {
    c.mc.n_paths = detail::count(j, "n_paths", "n_paths");
    if (c.mc.n_paths < 2) throw ConfigError("n_paths must be an integer >= 2");
  }
  if (j.contains("seed")) {
    c.mc.seed = detail::count(j, "seed", "seed");
  }
  if (j.contains("workers")) {
    c.mc.workers = static_cast<unsigned>(detail::count(j, "workers", "workers"));
  }
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    const std::string kind = detail::kind_of(e, "estimator");
    if (kind == "mean") {
      detail::reject_unknown(e, {"kind"}, "estimator");
      c.mc.estimator = {EstimatorConfig::Kind::mean, 1};
    } else if (kind == "median_of_means") {
      detail::reject_unknown(e, {"kind", "blocks"}, "estimator");
      const std::uint64_t blocks = e.contains("blocks") ? detail::count(e, "blocks", "estimator.blocks") : 32;
      if (blocks < 2) throw ConfigError("median_of_means needs at least 2 blocks");
      c.mc.estimator = {EstimatorConfig::Kind::median_of_means, static_cast<std::size_t>(blocks)};
    } else {
      throw ConfigError("unknown estimator kind '" + kind + "'");
    }
  }

  const json checks = j.value("checks", json::array());
  if (!checks.is_array()) throw ConfigError("'checks' must be an array of check names");
  std::set<std::string> wanted;
  for (const auto& v : checks) {
    if (!v.is_string()) throw ConfigError("check names must be strings");
    const auto name = v.get<std::string>();
    if (!is_known_check(name)) throw ConfigError("unknown check '" + name + "' (see list-checks)");
    wanted.insert(name);
  }
  for (const auto& [name, _] : check_registry())
    if (wanted.count(name)) c.checks.push_back(name);

  c.output_dir = j.value("output_dir", c.output_dir);
  c.cross_method_tolerance = detail::number_or(j, "cross_method_tolerance", c.cross_method_tolerance, "config");
  c.self_similarity_tolerance = detail::number_or(j, "self_similarity_tolerance", c.self_similarity_tolerance, "config");
  if (j.contains("window")) {
    const json& w = j.at("window");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() || w[0] > w[1])
      throw ConfigError("window must be [lo, hi] with lo <= hi");
    c.window = std::pair{w[0].get<double>(), w[1].get<double>()};
  }
  if (j.contains("gamma")) c.gamma = detail::number(j, "gamma", "config");
  return c;
}

/// FNV-1a over the canonical (sorted-key, compact) dump.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace volterra::io

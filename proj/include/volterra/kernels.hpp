#pragma once

// Volterra kernels f(t, s) with analytic densities df/ds, and numeric
// certification of the admissible class: Volterra property, continuity of
// the diagonal and boundary traces, weighted decay at -infinity, and
// weighted integrability of the density.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "volterra/quadrature.hpp"
#include "volterra/stats.hpp"

namespace volterra {

inline constexpr double kMinusInfinity = -std::numeric_limits<double>::infinity();

/// phi_q(t) = max(|t|^q, 1).
struct WeightFunction {
  double q = 0.0;

  explicit WeightFunction(double q_ = 0.0) : q(q_) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw std::invalid_argument("weight exponent q must be a nonnegative real");
  }
  double operator()(double t) const {
    const double a = std::abs(t);
    return a <= 1.0 ? 1.0 : std::pow(a, q);
  }
};

/// f(t, s) = lag(t - s) - anchor(s) on tau <= s <= t. Lets path builders
/// tabulate lag on the lattice once instead of calling f per (t, s) pair.
struct MovingAverageForm {
  std::function<double(double)> lag;
  std::function<double(double)> anchor;
};

class Kernel {
 public:
  using Fn2 = std::function<double(double, double)>;
  using Fn1 = std::function<double(double)>;

  struct Parts {
    std::string name;
    double tau = kMinusInfinity;
    Fn2 value;                                          // on tau <= s <= t
    Fn2 density;                                        // on tau <= s < t
    Fn1 diagonal;                                       // defaults to value(t, t)
    std::function<double(double, double, double)> increment;  // defaults to value differences
    std::function<std::vector<double>(double)> singular_points;  // points where the density blows up or jumps
    std::optional<MovingAverageForm> moving_average;
    bool builtin = false;  // a.e.-continuity of the density in t holds by construction
    bool identically_zero = false;
  };

  explicit Kernel(Parts parts) : p_(std::move(parts)) {
    if (!p_.value || !p_.density) throw std::invalid_argument("kernel needs both f and its density");
    if (std::isnan(p_.tau) || p_.tau == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("kernel support parameter tau must be a real or -infinity");
  }

  const std::string& name() const { return p_.name; }
  double tau() const { return p_.tau; }
  bool bounded_support() const { return std::isfinite(p_.tau); }
  bool builtin() const { return p_.builtin; }
  bool is_zero() const { return p_.identically_zero; }
  const std::optional<MovingAverageForm>& moving_average() const { return p_.moving_average; }

  /// f(t, s); zero for s > t and for s < tau.
  double value(double t, double s) const {
    if (s > t || s < p_.tau) return 0.0;
    return p_.value(t, s);
  }

  /// df/ds(t, s) for s < t; zero outside [tau, t).
  double density(double t, double s) const {
    if (s >= t || s < p_.tau) return 0.0;
    return p_.density(t, s);
  }

  double diagonal(double t) const { return p_.diagonal ? p_.diagonal(t) : value(t, t); }

  /// f(t, tau), or 0 when tau = -infinity (the convention f(t, -inf) = 0).
  double boundary(double t) const { return bounded_support() ? value(t, p_.tau) : 0.0; }

  /// f(t, b) - f(t, a).
  double increment(double t, double a, double b) const {
    if (p_.increment) return p_.increment(t, a, b);
    return value(t, b) - value(t, a);
  }

  /// Points in s (for fixed t) where the density is singular or
  /// discontinuous, including tau and t.
  std::vector<double> singular_points(double t) const {
    std::vector<double> pts = p_.singular_points ? p_.singular_points(t) : std::vector<double>{};
    pts.push_back(t);
    if (bounded_support()) pts.push_back(p_.tau);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  // -- constructors ---------------------------------------------------------

  static Kernel zero() {
    Parts p;
    p.name = "zero";
    p.value = [](double, double) { return 0.0; };
    p.density = [](double, double) { return 0.0; };
    p.diagonal = [](double) { return 0.0; };
    p.moving_average = MovingAverageForm{[](double) { return 0.0; }, [](double) { return 0.0; }};
    p.builtin = true;
    p.identically_zero = true;
    return Kernel(std::move(p));
  }

  /// f_d(t, s) = ((t - s)_+^d - (-s)_+^d) / Gamma(d + 1).
  static Kernel fractional(double d) {
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("fractional kernel needs 0 < d < 1");
    const double g = std::tgamma(d + 1.0);
    auto lag = [d, g](double x) { return x > 0.0 ? std::pow(x, d) / g : 0.0; };
    Parts p;
    p.name = "fractional(d=" + format_number(d) + ")";
    p.value = [d, g](double t, double s) {
      if (s >= 0.0) return std::pow(t - s, d) / g;
      // (u + t)^d - u^d with u = -s, written to keep precision for u >> t
      const double u = -s;
      return std::pow(u, d) * std::expm1(d * std::log1p(t / u)) / g;
    };
    p.density = [d, g](double t, double s) {
      if (s >= 0.0) return -d * std::pow(t - s, d - 1.0) / g;
      const double u = -s;
      return -d * std::pow(u, d - 1.0) * std::expm1((d - 1.0) * std::log1p(t / u)) / g;
    };
    p.diagonal = [](double) { return 0.0; };
    p.singular_points = [](double) { return std::vector<double>{0.0}; };
    p.moving_average = MovingAverageForm{lag, [lag](double s) { return lag(-s); }};
    p.builtin = true;
    return Kernel(std::move(p));
  }

  /// f(t, s) = exp(-rate (t - s)) for s <= t; unit diagonal.
  static Kernel exponential(double rate = 1.0) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential kernel needs a positive rate");
    Parts p;
    p.name = "exponential(rate=" + format_number(rate) + ")";
    p.value = [rate](double t, double s) { return std::exp(-rate * (t - s)); };
    p.density = [rate](double t, double s) { return rate * std::exp(-rate * (t - s)); };
    p.diagonal = [](double) { return 1.0; };
    p.moving_average = MovingAverageForm{[rate](double x) { return x >= 0.0 ? std::exp(-rate * x) : 0.0; },
                                         [](double) { return 0.0; }};
    p.builtin = true;
    return Kernel(std::move(p));
  }

  /// f(t, s) = 1 for 0 <= s <= t (tau = 0); reproduces the driver.
  static Kernel indicator() {
    Parts p;
    p.name = "indicator";
    p.tau = 0.0;
    p.value = [](double, double) { return 1.0; };
    p.density = [](double, double) { return 0.0; };
    p.diagonal = [](double) { return 1.0; };
    p.moving_average = MovingAverageForm{[](double x) { return x >= 0.0 ? 1.0 : 0.0; }, [](double) { return 0.0; }};
    p.builtin = true;
    return Kernel(std::move(p));
  }

  /// base(t, s) restricted to s >= tau.
  static Kernel shifted_support(const Kernel& base, double tau) {
    if (!std::isfinite(tau)) throw std::invalid_argument("shifted_support needs a finite tau");
    if (tau < base.tau()) throw std::invalid_argument("shifted_support tau lies outside the base kernel's support");
    Parts p;
    p.name = "shifted_support(tau=" + format_number(tau) + ", " + base.name() + ")";
    p.tau = tau;
    p.value = [base](double t, double s) { return base.value(t, s); };
    p.density = [base](double t, double s) { return base.density(t, s); };
    p.diagonal = [base](double t) { return base.diagonal(t); };
    p.singular_points = [base](double t) { return base.singular_points(t); };
    p.moving_average = base.moving_average();
    p.builtin = base.builtin();
    p.identically_zero = base.is_zero();
    return Kernel(std::move(p));
  }

  /// A user kernel. The density must be analytic; nothing is differentiated
  /// numerically.
  static Kernel custom(std::string name, double tau, Fn2 value, Fn2 density, Fn1 diagonal = {},
                       std::function<std::vector<double>(double)> singular_points = {}) {
    Parts p;
    p.name = std::move(name);
    p.tau = tau;
    p.value = std::move(value);
    p.density = std::move(density);
    p.diagonal = std::move(diagonal);
    p.singular_points = std::move(singular_points);
    return Kernel(std::move(p));
  }

  static std::string format_number(double x) {
    std::string s = std::to_string(x);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

 private:
  Parts p_;
};

// ---------------------------------------------------------------------------
// Integrals of the density

namespace detail {

// Cut points for integrals in s over [a, b]: kernel singularities plus the
// kinks of phi at |s| = 1.
inline std::vector<double> density_cuts(const Kernel& k, double t) {
  std::vector<double> pts = k.singular_points(t);
  pts.push_back(-1.0);
  pts.push_back(1.0);
  return pts;
}

// int_a^b g(s) ds for the s-integrand g of kernel k at time t.
template <class G>
QuadratureResult integrate_in_s(const Kernel& k, double t, double a, double b, G&& g, const QuadratureOptions& opt = {}) {
  const auto cuts = density_cuts(k, t);
  return integrate_with_singularities(g, a, b, cuts, opt);
}

}  // namespace detail

/// int_{-N}^{t} phi(|s|) |df/ds(t, s)| ds; N = infinity is allowed.
inline QuadratureResult weighted_density_at(const Kernel& k, const WeightFunction& w, double t, double N) {
  auto g = [&](double s) { return w(s) * std::abs(k.density(t, s)); };
  const double lo = std::max(-N, k.tau());
  if (std::isfinite(lo)) return detail::integrate_in_s(k, t, lo, t, g);
  const double start = std::max(1.0, std::abs(std::min(t, 0.0)) + 1.0);
  QuadratureResult near = detail::integrate_in_s(k, t, -start, t, g);
  QuadratureResult tail = integrate_tail([&](double u) { return g(-u); }, start);
  near.value += tail.value;
  near.converged = near.converged && tail.converged;
  return near;
}

/// int_{-infinity}^{-N} phi(|s|) |df/ds(t, s)| ds (0 beyond bounded support).
inline QuadratureResult weighted_density_tail(const Kernel& k, const WeightFunction& w, double t, double N) {
  QuadratureResult out;
  if (!(N > 0.0)) throw std::invalid_argument("tail integral needs N > 0");
  if (k.bounded_support() && -N <= k.tau()) return out;
  if (k.bounded_support()) {
    auto g = [&](double s) { return w(s) * std::abs(k.density(t, s)); };
    return detail::integrate_in_s(k, t, k.tau(), -N, g);
  }
  return integrate_tail([&](double u) { return w(u) * std::abs(k.density(t, -u)); }, N);
}

/// Integrand of the weighted integrability condition,
/// |df/ds phi(|s|)|^{1+eps} max(|s|^{2 eps}, 1).
inline double integrability_integrand(const Kernel& k, const WeightFunction& w, double eps, double t, double s) {
  const double a = std::abs(k.density(t, s) * w(s));
  const double lift = std::abs(s) <= 1.0 ? 1.0 : std::pow(std::abs(s), 2.0 * eps);
  return std::pow(a, 1.0 + eps) * lift;
}

// ---------------------------------------------------------------------------
// Class checks

struct DecayRow {
  double s = 0.0;
  double g = 0.0;  // max over t of |f(t, -s)| phi(s)
};

struct DecayReport {
  std::vector<DecayRow> table;
  double fitted_slope = 0.0;  // log10 g per decade over the top two decades
  double final_value = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string diagnostic;
};

struct DecayTolerances {
  double min_decay_factor = 1.05;  // g must shrink at least this much per decade
  double final_fraction = 0.5;     // and end at most this fraction of the table's peak
};

/// Weighted decay f(t, -s) phi(s) -> 0 as s -> infinity, judged on a table.
inline DecayReport check_decay(const Kernel& k, const WeightFunction& w, std::span<const double> t_grid,
                               std::span<const double> s_values, const DecayTolerances& tol = {}) {
  if (t_grid.empty()) throw std::invalid_argument("check_decay needs a nonempty t grid");
  if (s_values.size() < 2 || !std::is_sorted(s_values.begin(), s_values.end()) || !(s_values.front() > 0.0))
    throw std::invalid_argument("check_decay needs increasing positive s values");
  if (s_values.back() / s_values.front() < 999.999) throw std::invalid_argument("s values must span three decades");
  DecayReport rep;
  for (double s : s_values) {
    double g = 0.0;
    for (double t : t_grid) g = std::max(g, std::abs(k.value(t, -s)) * w(s));
    rep.table.push_back({s, g});
  }
  rep.final_value = rep.table.back().g;
  if (rep.final_value == 0.0) {
    rep.verdict = Verdict::pass;
    rep.diagnostic = "weighted kernel vanishes at the largest s";
    return rep;
  }
  std::vector<double> xs, ys;
  const double top = s_values.back();
  for (const auto& r : rep.table) {
    if (r.s >= top / 100.0 * (1.0 - 1e-12) && r.g > 0.0) {
      xs.push_back(r.s);
      ys.push_back(r.g);
    }
  }
  if (xs.size() < 2) {
    rep.verdict = Verdict::inconclusive;
    rep.diagnostic = "fewer than two positive values over the top two decades";
    return rep;
  }
  // slope in log10 units: natural-log slope is the same number
  rep.fitted_slope = fit_power_law(xs, ys).slope;
  const bool decays = rep.fitted_slope <= -std::log10(tol.min_decay_factor);
  double peak = 0.0;
  for (const auto& r : rep.table) peak = std::max(peak, r.g);
  const bool small = rep.final_value <= tol.final_fraction * peak;
  rep.verdict = decays && small ? Verdict::pass : Verdict::fail;
  rep.diagnostic = "decay exponent " + std::to_string(rep.fitted_slope) + ", final value " +
                   std::to_string(rep.final_value);
  return rep;
}

struct IntegrabilityReport {
  double epsilon = 0.0;
  std::vector<double> truncations;
  std::vector<double> sup_integral;  // max over t of the integral on [-N, t]
  LadderAssessment assessment;
  Verdict verdict() const { return assessment.verdict; }
};

inline std::vector<double> default_truncation_ladder() {
  std::vector<double> out;
  for (int k = 0; k <= 20; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

/// Ladder of max_t int_{-N}^{t} |df/ds phi|^{1+eps} max(|s|^{2 eps}, 1) ds.
inline IntegrabilityReport check_density_integrability(const Kernel& k, const WeightFunction& w, double eps,
                                                       std::span<const double> t_grid,
                                                       std::span<const double> truncations,
                                                       const LadderTolerances& tol = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (t_grid.empty() || truncations.empty()) throw std::invalid_argument("integrability check needs t grid and ladder");
  if (!std::is_sorted(truncations.begin(), truncations.end()) || !(truncations.front() > 0.0))
    throw std::invalid_argument("truncation ladder must be increasing and positive");
  IntegrabilityReport rep;
  rep.epsilon = eps;
  rep.truncations.assign(truncations.begin(), truncations.end());
  rep.sup_integral.assign(truncations.size(), 0.0);
  for (double t : t_grid) {
    auto g = [&](double s) { return integrability_integrand(k, w, eps, t, s); };
    double acc = 0.0;
    double upper = t;
    for (std::size_t i = 0; i < truncations.size(); ++i) {
      const double lo = std::max(-truncations[i], k.tau());
      if (lo < upper) {
        const auto piece = detail::integrate_in_s(k, t, lo, upper, g);
        acc += piece.value;
        upper = lo;
      }
      rep.sup_integral[i] = std::max(rep.sup_integral[i], acc);
      if (!std::isfinite(acc)) rep.sup_integral[i] = std::numeric_limits<double>::infinity();
    }
  }
  rep.assessment = assess_ladder(rep.truncations, rep.sup_integral, tol);
  return rep;
}

/// Upper end of the admissible epsilon range for the fractional kernel with
/// weight phi_q: min(1/(d+q) - 1, d/(1-d)), or none if that is <= 0.
inline std::optional<double> admissible_epsilon_fractional(double d, double q) {
  if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("d must lie in (0, 1)");
  if (!(q >= 0.0)) throw std::invalid_argument("q must be nonnegative");
  const double bound = std::min(1.0 / (d + q) - 1.0, d / (1.0 - d));
  if (!(bound > 1e-15)) return std::nullopt;
  return bound;
}

/// int_{-infinity}^{T} min(|s|^{-2}, 1) ds.
inline double inverse_square_mass(double T) {
  if (!(T >= 0.0)) throw std::invalid_argument("inverse_square_mass needs T >= 0");
  return T <= 1.0 ? 2.0 + T : 4.0 - 1.0 / T;
}

struct WeightedDensityReport {
  double direct = 0.0;        // max_t int phi |df/ds|
  double sup_integral = 0.0;  // max_t of the integrability integral
  double holder_bound = 0.0;
  bool bound_holds = true;
};

/// The weighted density integral and its Hölder upper bound
/// (sup integral)^{1/(1+eps)} (int min(|s|^{-2},1))^{eps/(1+eps)}.
inline WeightedDensityReport weighted_density_integral(const Kernel& k, const WeightFunction& w,
                                                       std::span<const double> t_grid, double N, double eps) {
  if (t_grid.empty()) throw std::invalid_argument("weighted_density_integral needs a t grid");
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  WeightedDensityReport rep;
  double T = 0.0;
  for (double t : t_grid) {
    T = std::max(T, t);
    rep.direct = std::max(rep.direct, weighted_density_at(k, w, t, N).value);
    const std::array<double, 1> ladder{N};
    const auto sup = check_density_integrability(k, w, eps, std::span<const double>(&t, 1), ladder);
    rep.sup_integral = std::max(rep.sup_integral, sup.sup_integral.front());
  }
  rep.holder_bound = std::pow(rep.sup_integral, 1.0 / (1.0 + eps)) *
                     std::pow(inverse_square_mass(std::max(T, 0.0)), eps / (1.0 + eps));
  rep.bound_holds = rep.direct <= rep.holder_bound * (1.0 + 1e-9);
  return rep;
}

struct IncrementSample {
  double t = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct ConsistencyReport {
  double max_abs_discrepancy = 0.0;
  double max_rel_discrepancy = 0.0;
  double tolerance = 1e-6;
  bool pass = true;
};

/// Compares kernel increments f(t,b) - f(t,a) with graded quadrature of the
/// density over [a, b].
inline ConsistencyReport consistency_check(const Kernel& k, std::span<const IncrementSample> samples,
                                           double tolerance = 1e-6) {
  ConsistencyReport rep;
  rep.tolerance = tolerance;
  for (const auto& c : samples) {
    if (!(c.a < c.b) || c.b > c.t) throw std::invalid_argument("consistency samples need a < b <= t");
    const double exact = k.increment(c.t, c.a, c.b);
    const double quad = detail::integrate_in_s(k, c.t, c.a, c.b, [&](double s) { return k.density(c.t, s); }).value;
    const double err = std::abs(exact - quad);
    const double rel = err == 0.0 ? 0.0 : err / std::max(std::abs(exact), 1e-12);
    rep.max_abs_discrepancy = std::max(rep.max_abs_discrepancy, err);
    rep.max_rel_discrepancy = std::max(rep.max_rel_discrepancy, rel);
  }
  rep.pass = rep.max_rel_discrepancy <= tolerance;
  return rep;
}

struct ContinuityEvidence {
  double modulus_coarse = 0.0;  // max |g(t_{i+1}) - g(t_i)| at spacing h
  double modulus_fine = 0.0;    // same at spacing h / 4
  bool shrinking = true;
};

/// Dense-sampling modulus of continuity of g on [0, T].
template <class G>
ContinuityEvidence continuity_evidence(G&& g, double T, std::size_t points = 256) {
  ContinuityEvidence ev;
  auto modulus = [&](std::size_t n) {
    double m = 0.0;
    double prev = g(0.0);
    for (std::size_t i = 1; i <= n; ++i) {
      const double cur = g(T * static_cast<double>(i) / static_cast<double>(n));
      m = std::max(m, std::abs(cur - prev));
      prev = cur;
    }
    return m;
  };
  ev.modulus_coarse = modulus(points);
  ev.modulus_fine = modulus(4 * points);
  ev.shrinking = ev.modulus_fine <= 1e-12 || ev.modulus_fine < 0.75 * ev.modulus_coarse;
  return ev;
}

struct KernelClassReport {
  double q = 0.0;
  double epsilon = 0.0;
  bool volterra = true;
  ContinuityEvidence diagonal_continuity;
  ContinuityEvidence boundary_continuity;
  DecayReport decay;
  IntegrabilityReport integrability;
  std::vector<std::string> warnings;
  Verdict verdict = Verdict::inconclusive;
};

/// Runs every numeric check of kernel-class membership on [0, max t_grid].
inline KernelClassReport certify_kernel_class(const Kernel& k, const WeightFunction& w, double eps,
                                              std::span<const double> t_grid, std::span<const double> s_values,
                                              std::span<const double> truncations, const DecayTolerances& dtol = {},
                                              const LadderTolerances& ltol = {}) {
  KernelClassReport rep;
  rep.q = w.q;
  rep.epsilon = eps;
  double T = 0.0;
  for (double t : t_grid) {
    T = std::max(T, t);
    for (double ds : {1e-9, 1e-3, 0.5, 1.0, 10.0})
      if (k.value(t, t + ds) != 0.0) rep.volterra = false;
  }
  if (T > 0.0) {
    rep.diagonal_continuity = continuity_evidence([&](double t) { return k.diagonal(t); }, T);
    rep.boundary_continuity = continuity_evidence([&](double t) { return k.boundary(t); }, T);
  }
  rep.decay = check_decay(k, w, t_grid, s_values, dtol);
  rep.integrability = check_density_integrability(k, w, eps, t_grid, truncations, ltol);
  if (!k.builtin())
    rep.warnings.push_back("a.e.-continuity of the density in t is not checked for user kernels");
  if (!rep.volterra) rep.warnings.push_back("kernel is nonzero above the diagonal");
  if (!rep.diagonal_continuity.shrinking) rep.warnings.push_back("diagonal trace does not look continuous");
  if (!rep.boundary_continuity.shrinking) rep.warnings.push_back("boundary trace does not look continuous");

  const bool structural = rep.volterra && rep.diagonal_continuity.shrinking && rep.boundary_continuity.shrinking;
  if (!structural || rep.decay.verdict == Verdict::fail || rep.integrability.verdict() == Verdict::fail)
    rep.verdict = Verdict::fail;
  else if (rep.decay.verdict == Verdict::pass && rep.integrability.verdict() == Verdict::pass)
    rep.verdict = Verdict::pass;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

}  // namespace volterra

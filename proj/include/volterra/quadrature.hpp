#pragma once

// Quadrature for integrands with power-law singularities and power-law
// tails, plus the trend test used to judge truncation ladders.
//
// Singular endpoints are handled by dyadic grading: [a, b] is cut into
// shells [a + h 2^{-k-1}, a + h 2^{-k}] on which the integrand is smooth,
// and the shell sums are extrapolated geometrically once they settle.
// Half-infinite ranges use the same idea with shells [N 2^k, N 2^{k+1}].

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "volterra/stats.hpp"

namespace volterra {

struct QuadratureOptions {
  double rel_tol = 1e-11;
  unsigned max_depth = 12;
  int max_shells = 400;
  int settle_shells = 3;  // consecutive small shells needed before stopping
  int min_shells = 6;
};

struct QuadratureResult {
  double value = 0.0;
  bool converged = true;  // false: shells did not shrink (non-integrable)
  double shell_ratio = 0.0;
  int shells = 0;
};

template <class F>
double integrate_smooth(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (!(b > a)) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  // One rule first. Boost's error estimate has an absolute floor and is very
  // pessimistic once the abscissae round relative to the interval (short
  // intervals away from the origin), so before refining adaptively the
  // single rule is checked against the same rule on the two halves.
  double err = 0.0, l1 = 0.0;
  const double once = GK::integrate(f, a, b, 0, opt.rel_tol, &err, &l1);
  if (err <= opt.rel_tol * l1) return once;
  const double mid = 0.5 * (a + b);
  double l1a = 0.0, l1b = 0.0;
  const double halves = GK::integrate(f, a, mid, 0, opt.rel_tol, &err, &l1a) + GK::integrate(f, mid, b, 0, opt.rel_tol, &err, &l1b);
  const double eps = std::numeric_limits<double>::epsilon();
  const double l1h = l1a + l1b;
  const double floor = 64.0 * eps * l1h * std::max({1.0, std::abs(a), std::abs(b)}) / (b - a);
  if (std::isfinite(halves) && std::abs(halves - once) <= std::max(opt.rel_tol * l1h, floor)) return halves;
  return GK::integrate(f, a, b, opt.max_depth, opt.rel_tol);
}

namespace detail {

// Sum a sequence of shell integrals shell(0), shell(1), ... that should
// decay geometrically. `usable(k)` reports whether shell k is still
// representable.
template <class Shell, class Usable>
QuadratureResult sum_shells(Shell&& shell, Usable&& usable, const QuadratureOptions& opt) {
  QuadratureResult res;
  double sum = 0.0;
  double prev = 0.0;
  double cur = 0.0;
  int small_run = 0;
  int k = 0;
  for (; k < opt.max_shells && usable(k); ++k) {
    prev = cur;
    cur = shell(k);
    sum += cur;
    const double scale = std::max(std::abs(sum), std::numeric_limits<double>::min());
    small_run = std::abs(cur) <= opt.rel_tol * scale ? small_run + 1 : 0;
    if (k + 1 >= opt.min_shells && small_run >= opt.settle_shells) {
      res.value = sum;
      res.shells = k + 1;
      res.shell_ratio = prev != 0.0 ? cur / prev : 0.0;
      return res;
    }
  }
  res.shells = k;
  if (cur == 0.0) {
    res.value = sum;
    return res;
  }
  const double r = prev != 0.0 ? cur / prev : 1.0;
  res.shell_ratio = r;
  if (r >= 0.0 && r < 1.0 - 1e-9) {
    res.value = sum + cur * r / (1.0 - r);
  } else if (r < 0.0 && std::abs(r) < 1.0) {
    res.value = sum;  // oscillating remainder, already below the last shell
  } else {
    res.converged = false;
    res.value = std::copysign(std::numeric_limits<double>::infinity(), sum);
  }
  return res;
}

}  // namespace detail

/// Integral over [a, b] of an integrand that may blow up at `a`
/// (singular_at_a) or at `b`.
template <class F>
QuadratureResult integrate_graded(F&& f, double a, double b, bool singular_at_a, bool singular_at_b,
                                  const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (!(b > a)) return out;
  if (!singular_at_a && !singular_at_b) {
    out.value = integrate_smooth(f, a, b, opt);
    return out;
  }
  if (singular_at_a && singular_at_b) {
    const double mid = 0.5 * (a + b);
    auto left = integrate_graded(f, a, mid, true, false, opt);
    auto right = integrate_graded(f, mid, b, false, true, opt);
    out.value = left.value + right.value;
    out.converged = left.converged && right.converged;
    out.shell_ratio = std::max(left.shell_ratio, right.shell_ratio);
    out.shells = left.shells + right.shells;
    return out;
  }
  const double h = b - a;
  const double anchor = singular_at_a ? a : b;
  const double floor_width = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(anchor), h);
  auto shell = [&](int k) {
    const double outer = h * std::ldexp(1.0, -k);
    const double inner = 0.5 * outer;
    if (singular_at_a) return integrate_smooth(f, a + inner, a + outer, opt);
    return integrate_smooth(f, b - outer, b - inner, opt);
  };
  auto usable = [&](int k) { return h * std::ldexp(1.0, -k - 1) > floor_width; };
  return detail::sum_shells(shell, usable, opt);
}

/// Integral over [a, b] with possible singularities at the listed points
/// (points outside [a, b] are ignored).
template <class F>
QuadratureResult integrate_with_singularities(F&& f, double a, double b, std::span<const double> singular,
                                              const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (!(b > a)) return out;
  std::vector<double> cuts{a, b};
  for (double s : singular)
    if (s > a && s < b) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto is_singular = [&](double x) { return std::find(singular.begin(), singular.end(), x) != singular.end(); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto piece = integrate_graded(f, cuts[i], cuts[i + 1], is_singular(cuts[i]), is_singular(cuts[i + 1]), opt);
    out.value += piece.value;
    out.converged = out.converged && piece.converged;
    out.shell_ratio = std::max(out.shell_ratio, piece.shell_ratio);
    out.shells += piece.shells;
  }
  return out;
}

/// Integral of f over [start, infinity), start > 0, for integrands with
/// power-law decay.
template <class F>
QuadratureResult integrate_tail(F&& f, double start, const QuadratureOptions& opt = {}) {
  if (!(start > 0.0)) throw std::invalid_argument("integrate_tail needs a positive start");
  auto shell = [&](int k) {
    const double lo = std::ldexp(start, k);
    return integrate_smooth(f, lo, 2.0 * lo, opt);
  };
  auto usable = [&](int k) { return std::isfinite(std::ldexp(start, k + 1)) && k < 1000; };
  QuadratureOptions tail_opt = opt;
  tail_opt.max_shells = std::min(opt.max_shells, 60);
  tail_opt.min_shells = std::max(opt.min_shells, 8);
  return detail::sum_shells(shell, usable, tail_opt);
}

// ---------------------------------------------------------------------------
// Truncation-ladder trend test.

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
  }
}

struct LadderTolerances {
  double relative_increment = 1e-3;  // Cauchy criterion over the last rung
  double decay_slope = 0.02;         // increments must shrink like N^{-decay_slope} or faster
  std::size_t fit_points = 4;
};

struct LadderAssessment {
  Verdict verdict = Verdict::inconclusive;
  double relative_last_increment = 0.0;
  double increment_slope = 0.0;  // log-log slope of rung increments against N
  double extrapolated_limit = 0.0;
  std::string diagnostic;
};

/// Judges whether values v(N) on an increasing ladder of N settle.
/// Passes on the Cauchy criterion, or when the rung increments decay like a
/// power of N with exponent below -decay_slope (a convergent geometric tail
/// on a geometric ladder). Fails when the increments do not shrink.
inline LadderAssessment assess_ladder(std::span<const double> scales, std::span<const double> values,
                                      const LadderTolerances& tol = {}) {
  LadderAssessment out;
  if (scales.size() != values.size()) throw std::invalid_argument("ladder scales and values differ in length");
  for (double v : values) {
    if (!std::isfinite(v)) {
      out.verdict = Verdict::fail;
      out.extrapolated_limit = std::numeric_limits<double>::infinity();
      out.diagnostic = "non-finite ladder value (non-integrable singularity or overflow)";
      return out;
    }
  }
  if (values.size() < 2) {
    out.diagnostic = "ladder needs at least two rungs";
    if (!values.empty()) out.extrapolated_limit = values.back();
    return out;
  }
  const std::size_t n = values.size();
  const double last = values[n - 1];
  const double inc = last - values[n - 2];
  out.extrapolated_limit = last;
  out.relative_last_increment = last != 0.0 ? std::abs(inc) / std::abs(last) : (inc == 0.0 ? 0.0 : 1.0);

  const std::size_t m = std::min(tol.fit_points, n - 1);
  std::vector<double> xs, ys;
  bool monotone = true;
  for (std::size_t i = n - m; i < n; ++i) {
    const double d = values[i] - values[i - 1];
    if (!(d > 0.0)) {
      monotone = false;
      break;
    }
    xs.push_back(scales[i]);
    ys.push_back(d);
  }
  if (monotone && xs.size() >= 2) {
    const LinearFit fit = fit_power_law(xs, ys);
    out.increment_slope = fit.slope;
    const double ratio = std::pow(scales[n - 1] / scales[n - 2], fit.slope);
    if (ratio < 1.0) out.extrapolated_limit = last + inc * ratio / (1.0 - ratio);
    else out.extrapolated_limit = std::numeric_limits<double>::infinity();
  }

  if (out.relative_last_increment < tol.relative_increment) {
    out.verdict = Verdict::pass;
    out.diagnostic = "Cauchy: last relative increment below tolerance";
    return out;
  }
  if (!monotone || xs.size() < 3) {
    out.verdict = Verdict::inconclusive;
    out.diagnostic = "increments not monotone or too few rungs for a trend";
    return out;
  }
  if (out.increment_slope < -tol.decay_slope) {
    out.verdict = Verdict::pass;
    out.diagnostic = "rung increments decay as a power of N; geometric tail extrapolated";
  } else {
    out.verdict = Verdict::fail;
    out.diagnostic = "rung increments do not decay (growth exponent " + std::to_string(out.increment_slope) + ")";
  }
  return out;
}

}  // namespace volterra

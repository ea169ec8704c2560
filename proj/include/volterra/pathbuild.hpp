#pragma once

// Sample paths of M(t) = int_{-inf}^t f(t, s) X(ds) on driver nodes.
//
// Integration by parts on the node grid, with X frozen at the left end of
// every cell,
//   f(t,t) X(t) - f(t,lo) X(lo) - sum_i X(s_i) [f(t,s_{i+1}) - f(t,s_i)],
// telescopes to the right-point sum  sum_{lo < n <= k} f(t, s_n) dX_n  with
// dX_n = X(s_n) - X(s_{n-1}). The boundary term is kept at the truncation
// point too, so this is the exact by-parts form of the truncated integral.
// The direct method evaluates the same integral with f at the left end of
// each diffusive cell and jumps weighted by f at the jump time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "volterra/kernels.hpp"
#include "volterra/levy.hpp"

namespace volterra {

enum class BuildMethod { ibp, direct };

inline const char* to_string(BuildMethod m) { return m == BuildMethod::ibp ? "ibp" : "direct"; }

struct VolterraPath {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<Jump> jumps;  // M(u) - M(u-) at driver jump times u that have a pre-jump node
  double truncation = 0.0;
  double base_step = 0.0;
  BuildMethod method = BuildMethod::ibp;

  double sup_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Driver nodes in [0, T]: the natural t grid (lattice, jump times and their
/// pre-jump companions).
inline std::vector<double> evaluation_times(const TwoSidedPath& driver, double T) {
  std::vector<double> out;
  for (double t : driver.times)
    if (t >= 0.0 && t <= T) out.push_back(t);
  return out;
}

namespace detail {

struct Engine {
  const Kernel& kernel;
  const TwoSidedPath& driver;
  std::size_t lo = 0;
  std::vector<double> weights;  // per node, for nodes >= lo

  // sum_{n = lo}^{k} f(t, s_n) weights[n] with t = driver.times[k]
  std::vector<double> evaluate(std::span<const std::size_t> t_index) const {
    std::vector<double> out(t_index.size(), 0.0);
    const auto& ma = kernel.moving_average();
    if (!ma) {
      for (std::size_t j = 0; j < t_index.size(); ++j) {
        const std::size_t k = t_index[j];
        const double t = driver.times[k];
        double acc = 0.0;
        for (std::size_t n = lo; n <= k; ++n) acc += kernel.value(t, driver.times[n]) * weights[n];
        out[j] = acc;
      }
      return out;
    }
    // f(t, s) = lag(t - s) - anchor(s): prefix sums of anchor * w, and a
    // dense lag table for lattice pairs.
    const std::size_t n_nodes = driver.size();
    std::vector<double> anchor_prefix(n_nodes + 1, 0.0);
    for (std::size_t n = lo; n < n_nodes; ++n)
      anchor_prefix[n + 1] = anchor_prefix[n] + ma->anchor(driver.times[n]) * weights[n];

    std::int64_t k_lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t k_hi = std::numeric_limits<std::int64_t>::min();
    for (std::size_t n = lo; n < n_nodes; ++n) {
      if (driver.lattice[n] == kOffLattice) continue;
      k_lo = std::min(k_lo, driver.lattice[n]);
      k_hi = std::max(k_hi, driver.lattice[n]);
    }
    const bool have_lattice = k_lo <= k_hi;
    std::vector<double> dense;     // lattice weights indexed by k - k_lo
    std::vector<std::size_t> off;  // off-lattice node indices
    if (have_lattice) dense.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
    for (std::size_t n = lo; n < n_nodes; ++n) {
      if (driver.lattice[n] == kOffLattice) off.push_back(n);
      else dense[static_cast<std::size_t>(driver.lattice[n] - k_lo)] = weights[n];
    }
    // reversed lag table: rev[J - j] = lag(j * step), J = k_hi - k_lo
    std::vector<double> rev;
    const double step = driver.base_step;
    if (have_lattice) {
      const std::size_t J = dense.size() - 1;
      rev.assign(J + 1, 0.0);
      for (std::size_t j = 0; j <= J; ++j) rev[J - j] = ma->lag(static_cast<double>(j) * step);
    }

    for (std::size_t j = 0; j < t_index.size(); ++j) {
      const std::size_t k = t_index[j];
      const double t = driver.times[k];
      double acc = -anchor_prefix[k + 1];
      const std::int64_t m = driver.lattice[k];
      if (m != kOffLattice && have_lattice) {
        // sum over lattice k' in [k_lo, m] of lag((m - k') step) dense[k' - k_lo]
        const std::size_t len = static_cast<std::size_t>(std::min(m, k_hi) - k_lo + 1);
        const std::size_t J = dense.size() - 1;
        const std::size_t shift = J - static_cast<std::size_t>(m - k_lo);
        const double* r = rev.data() + shift;
        const double* w = dense.data();
        double lattice_sum = 0.0;
        if (m >= k_lo)
          for (std::size_t i = 0; i < len; ++i) lattice_sum += r[i] * w[i];
        acc += lattice_sum;
        for (std::size_t n : off)
          if (n <= k) acc += ma->lag(t - driver.times[n]) * weights[n];
      } else {
        for (std::size_t n = lo; n <= k; ++n) acc += ma->lag(t - driver.times[n]) * weights[n];
      }
      out[j] = acc;
    }
    return out;
  }
};

inline std::size_t lower_node(const Kernel& kernel, const TwoSidedPath& driver, double truncation) {
  if (!(truncation > 0.0)) throw std::invalid_argument("truncation N must be positive");
  const double lower = std::max(kernel.tau(), -truncation);
  if (driver.left() > lower)
    throw std::invalid_argument("driver grid does not cover the integration range (left end " +
                                std::to_string(driver.left()) + " > " + std::to_string(lower) + ")");
  const auto idx = driver.node_index(lower);
  if (!idx) throw std::invalid_argument("lower integration limit " + std::to_string(lower) + " is not a driver node");
  return *idx;
}

inline std::vector<std::size_t> t_indices(const TwoSidedPath& driver, std::span<const double> t_grid) {
  std::vector<std::size_t> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    if (t < 0.0) throw std::invalid_argument("evaluation times must be nonnegative");
    const auto idx = driver.node_index(t);
    if (!idx) throw std::invalid_argument("evaluation time " + std::to_string(t) + " is not a driver node");
    out.push_back(*idx);
  }
  if (!std::is_sorted(out.begin(), out.end())) throw std::invalid_argument("evaluation times must be increasing");
  return out;
}

inline void attach_jumps(VolterraPath& path, const TwoSidedPath& driver) {
  for (const Jump& j : driver.jumps) {
    if (j.time <= 0.0) continue;
    auto it = std::lower_bound(path.times.begin(), path.times.end(), j.time);
    if (it == path.times.end() || *it != j.time || it == path.times.begin()) continue;
    const auto i = static_cast<std::size_t>(it - path.times.begin());
    // only observable when the previous evaluation time is the pre-jump node
    const auto di = driver.node_index(j.time);
    if (!di || *di == 0 || driver.times[*di - 1] != path.times[i - 1]) continue;
    path.jumps.push_back({j.time, path.values[i] - path.values[i - 1]});
  }
}

inline VolterraPath build(const Kernel& kernel, const TwoSidedPath& driver, std::span<const double> t_grid,
                          double truncation, BuildMethod method) {
  if (driver.size() == 0) throw std::invalid_argument("empty driver path");
  const std::size_t lo = lower_node(kernel, driver, truncation);
  const auto idx = t_indices(driver, t_grid);
  VolterraPath out;
  out.times.assign(t_grid.begin(), t_grid.end());
  out.truncation = truncation;
  out.base_step = driver.base_step;
  out.method = method;
  if (kernel.is_zero()) {
    out.values.assign(idx.size(), 0.0);
    attach_jumps(out, driver);
    return out;
  }
  Engine eng{kernel, driver, lo, std::vector<double>(driver.size(), 0.0)};
  const std::size_t n = driver.size();
  if (method == BuildMethod::ibp) {
    for (std::size_t i = lo + 1; i < n; ++i) eng.weights[i] = driver.values[i] - driver.values[i - 1];
  } else {
    eng.weights[lo] = lo + 1 < n ? driver.continuous[lo] : 0.0;
    for (std::size_t i = lo + 1; i < n; ++i)
      eng.weights[i] = driver.jump_sizes[i] + (i + 1 < n ? driver.continuous[i] : 0.0);
  }
  out.values = eng.evaluate(idx);
  if (method == BuildMethod::direct) {
    // drop the diffusive cell that starts at t
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::size_t k = idx[j];
      if (k + 1 < n && k >= lo) out.values[j] -= kernel.value(out.times[j], out.times[j]) * driver.continuous[k];
    }
  }
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (idx[j] < lo) out.values[j] = 0.0;  // t below the support
  attach_jumps(out, driver);
  return out;
}

}  // namespace detail

/// M on t_grid by integration by parts, integrating from max(tau, -N).
/// `truncation` defaults to the driver's left end.
inline VolterraPath build_ibp(const Kernel& kernel, const TwoSidedPath& driver, std::span<const double> t_grid,
                              std::optional<double> truncation = std::nullopt) {
  return detail::build(kernel, driver, t_grid, truncation.value_or(-driver.left()), BuildMethod::ibp);
}

/// M on t_grid as the truncated stochastic integral over [max(tau, -N), t].
inline VolterraPath build_direct(const Kernel& kernel, const TwoSidedPath& driver, std::span<const double> t_grid,
                                 double truncation) {
  return detail::build(kernel, driver, t_grid, truncation, BuildMethod::direct);
}

struct TruncationRung {
  double N = 0.0;
  double tail_bound = 0.0;
};

struct TruncationBudget {
  double N = 1.0;
  double tail_bound = 0.0;
  double weighted_sup = 0.0;
  bool met = true;
  std::vector<TruncationRung> ladder;
};

/// Kernel tail beyond -N: max over t of |f(t,-N)| phi(N) + int_{-inf}^{-N} phi |df/ds|.
inline double kernel_tail(const Kernel& kernel, const WeightFunction& w, std::span<const double> t_grid, double N) {
  if (kernel.bounded_support() && -N <= kernel.tau()) return 0.0;
  double worst = 0.0;
  for (double t : t_grid)
    worst = std::max(worst, std::abs(kernel.value(t, -N)) * w(N) + weighted_density_tail(kernel, w, t, N).value);
  return worst;
}

/// Smallest N on the ladder 1, 2, 4, ..., 2^20 whose tail bound
/// weighted_sup * kernel_tail(N) is within tolerance.
inline TruncationBudget choose_truncation(const Kernel& kernel, const WeightFunction& w, double weighted_sup,
                                          double tolerance, std::span<const double> t_grid) {
  if (!(weighted_sup >= 0.0)) throw std::invalid_argument("weighted sup estimate must be nonnegative");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
  if (t_grid.empty()) throw std::invalid_argument("choose_truncation needs a t grid");
  TruncationBudget b;
  b.weighted_sup = weighted_sup;
  for (int k = 0; k <= 20; ++k) {
    const double N = std::ldexp(1.0, k);
    const double tail = weighted_sup == 0.0 ? 0.0 : weighted_sup * kernel_tail(kernel, w, t_grid, N);
    b.ladder.push_back({N, tail});
    if (tail <= tolerance) {
      b.N = N;
      b.tail_bound = tail;
      b.met = true;
      return b;
    }
  }
  b.N = b.ladder.back().N;
  b.tail_bound = b.ladder.back().tail_bound;
  b.met = false;
  return b;
}

struct JumpRelationRow {
  double time = 0.0;
  double driver_jump = 0.0;
  double path_jump = 0.0;
  double predicted = 0.0;  // f(t,t) * driver jump
  double discrepancy = 0.0;
};

struct JumpRelationReport {
  std::vector<JumpRelationRow> rows;
  double max_discrepancy = 0.0;
  double max_path_jump = 0.0;
};

/// Compares observed jumps of M with f(t,t) times the driver's jumps.
inline JumpRelationReport extract_jump_relation(const Kernel& kernel, const TwoSidedPath& driver,
                                                const VolterraPath& M) {
  JumpRelationReport rep;
  for (const Jump& mj : M.jumps) {
    const auto di = driver.node_index(mj.time);
    const double dl = di ? driver.jump_sizes[*di] : 0.0;
    JumpRelationRow row{mj.time, dl, mj.size, kernel.diagonal(mj.time) * dl, 0.0};
    row.discrepancy = std::abs(row.path_jump - row.predicted);
    rep.max_discrepancy = std::max(rep.max_discrepancy, row.discrepancy);
    rep.max_path_jump = std::max(rep.max_path_jump, std::abs(row.path_jump));
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace volterra

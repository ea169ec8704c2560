#pragma once

// Driving Lévy models and two-sided càdlàg sample paths.
//
// A model is a characteristic triplet restricted to simulable jump parts:
// none, compound Poisson with a known jump law, or symmetric alpha-stable.
// Paths live on a lattice of multiples of a base step plus embedded extra
// times; every compound-Poisson jump time is a node, preceded by a
// companion node a tiny gap earlier that carries the left limit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "volterra/parallel.hpp"
#include "volterra/random.hpp"
#include "volterra/stats.hpp"

namespace volterra {

// ---------------------------------------------------------------------------
// Jump laws

struct NormalJumps {
  double mean = 0.0;
  double sd = 1.0;
};

/// +magnitude or -magnitude with probability 1/2 each.
struct TwoPointJumps {
  double magnitude = 1.0;
};

struct UniformJumps {
  double lower = -1.0;
  double upper = 1.0;
};

/// A user-supplied jump law. The characteristic function is optional; a
/// model using a law without one cannot report its exponent.
struct CustomJumps {
  std::function<double(Rng&)> sample;
  double mean = 0.0;
  double second_moment = 0.0;
  double fourth_moment = 0.0;
  double tail_mean = 0.0;  // E[J 1{|J| > 1}]
  std::function<std::complex<double>(double)> characteristic;
};

using JumpDistribution = std::variant<NormalJumps, TwoPointJumps, UniformJumps, CustomJumps>;

namespace detail {

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace detail

inline double jump_mean(const JumpDistribution& j) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) return d.mean;
        else if constexpr (std::is_same_v<D, TwoPointJumps>) return 0.0;
        else if constexpr (std::is_same_v<D, UniformJumps>) return 0.5 * (d.lower + d.upper);
        else return d.mean;
      },
      j);
}

inline double jump_second_moment(const JumpDistribution& j) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) return d.sd * d.sd + d.mean * d.mean;
        else if constexpr (std::is_same_v<D, TwoPointJumps>) return d.magnitude * d.magnitude;
        else if constexpr (std::is_same_v<D, UniformJumps>)
          return (d.upper * d.upper + d.upper * d.lower + d.lower * d.lower) / 3.0;
        else return d.second_moment;
      },
      j);
}

inline double jump_fourth_moment(const JumpDistribution& j) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) {
          const double m = d.mean, s2 = d.sd * d.sd;
          return m * m * m * m + 6.0 * m * m * s2 + 3.0 * s2 * s2;
        } else if constexpr (std::is_same_v<D, TwoPointJumps>) {
          return std::pow(d.magnitude, 4);
        } else if constexpr (std::is_same_v<D, UniformJumps>) {
          return (std::pow(d.upper, 5) - std::pow(d.lower, 5)) / (5.0 * (d.upper - d.lower));
        } else {
          return d.fourth_moment;
        }
      },
      j);
}

/// E[J 1{|J| > 1}], the part of the mean carried by large jumps.
inline double jump_tail_mean(const JumpDistribution& j) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) {
          if (d.sd == 0.0) return std::abs(d.mean) > 1.0 ? d.mean : 0.0;
          const double zu = (1.0 - d.mean) / d.sd;
          const double zl = (-1.0 - d.mean) / d.sd;
          const double upper = d.mean * (1.0 - detail::std_normal_cdf(zu)) + d.sd * detail::std_normal_pdf(zu);
          const double lower = d.mean * detail::std_normal_cdf(zl) - d.sd * detail::std_normal_pdf(zl);
          return upper + lower;
        } else if constexpr (std::is_same_v<D, TwoPointJumps>) {
          return 0.0;
        } else if constexpr (std::is_same_v<D, UniformJumps>) {
          // integral of x over [lower, upper] minus [-1, 1], divided by the width
          auto clip = [](double x) { return std::clamp(x, -1.0, 1.0); };
          const double inner = 0.5 * (clip(d.upper) * clip(d.upper) - clip(d.lower) * clip(d.lower));
          const double total = 0.5 * (d.upper * d.upper - d.lower * d.lower);
          return (total - inner) / (d.upper - d.lower);
        } else {
          return d.tail_mean;
        }
      },
      j);
}

/// E[exp(i u J)]; throws std::domain_error for a custom law without a hook.
inline std::complex<double> jump_characteristic(const JumpDistribution& j, double u) {
  using namespace std::complex_literals;
  return std::visit(
      [u](const auto& d) -> std::complex<double> {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) {
          return std::exp(std::complex<double>(-0.5 * d.sd * d.sd * u * u, u * d.mean));
        } else if constexpr (std::is_same_v<D, TwoPointJumps>) {
          return {std::cos(u * d.magnitude), 0.0};
        } else if constexpr (std::is_same_v<D, UniformJumps>) {
          if (u == 0.0) return {1.0, 0.0};
          return (std::exp(1i * (u * d.upper)) - std::exp(1i * (u * d.lower))) / (1i * (u * (d.upper - d.lower)));
        } else {
          if (!d.characteristic) throw std::domain_error("jump distribution has no characteristic-function hook");
          return d.characteristic(u);
        }
      },
      j);
}

inline double sample_jump(const JumpDistribution& j, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormalJumps>) {
          return d.mean + d.sd * std::normal_distribution<double>(0.0, 1.0)(rng);
        } else if constexpr (std::is_same_v<D, TwoPointJumps>) {
          return std::bernoulli_distribution(0.5)(rng) ? d.magnitude : -d.magnitude;
        } else if constexpr (std::is_same_v<D, UniformJumps>) {
          return std::uniform_real_distribution<double>(d.lower, d.upper)(rng);
        } else {
          return d.sample(rng);
        }
      },
      j);
}

/// Sum of `count` independent jumps, exact in law; closed forms where they
/// exist so that long horizons stay cheap.
inline double sample_jump_sum(const JumpDistribution& j, std::uint64_t count, Rng& rng) {
  if (count == 0) return 0.0;
  if (const auto* n = std::get_if<NormalJumps>(&j)) {
    const double c = static_cast<double>(count);
    return c * n->mean + n->sd * std::sqrt(c) * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  if (const auto* tp = std::get_if<TwoPointJumps>(&j)) {
    const auto ups = std::binomial_distribution<std::uint64_t>(count, 0.5)(rng);
    return tp->magnitude * (2.0 * static_cast<double>(ups) - static_cast<double>(count));
  }
  double s = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) s += sample_jump(j, rng);
  return s;
}

// ---------------------------------------------------------------------------
// Models

struct NoJumps {};

struct CompoundPoisson {
  double rate = 1.0;
  JumpDistribution jumps = NormalJumps{};
};

struct SymmetricStable {
  double alpha = 1.5;
  double scale = 1.0;
};

using JumpSpec = std::variant<NoJumps, CompoundPoisson, SymmetricStable>;

/// Centred Lévy model: Gaussian part sigma plus one simulable jump part.
class LevyModel {
 public:
  LevyModel() = default;

  LevyModel(double sigma, JumpSpec jumps) : sigma_(sigma), jumps_(std::move(jumps)) { validate(); }

  static LevyModel brownian(double sigma = 1.0) { return {sigma, NoJumps{}}; }
  static LevyModel null_model() { return {0.0, NoJumps{}}; }
  static LevyModel compound_poisson(double sigma, double rate, JumpDistribution j) {
    return {sigma, CompoundPoisson{rate, std::move(j)}};
  }
  static LevyModel stable(double alpha, double scale = 1.0) { return {0.0, SymmetricStable{alpha, scale}}; }

  double sigma() const { return sigma_; }
  const JumpSpec& jumps() const { return jumps_; }

  const CompoundPoisson* compound_poisson_part() const { return std::get_if<CompoundPoisson>(&jumps_); }
  const SymmetricStable* stable_part() const { return std::get_if<SymmetricStable>(&jumps_); }

  bool is_stable() const { return stable_part() != nullptr; }
  bool finite_variance() const { return !is_stable(); }
  bool is_null() const { return sigma_ == 0.0 && std::holds_alternative<NoJumps>(jumps_); }

  /// Drift of the triplet, -int_{|x|>1} x nu(dx).
  double gamma() const {
    if (const auto* cp = compound_poisson_part()) return -cp->rate * jump_tail_mean(cp->jumps);
    return 0.0;
  }

  /// Drift added to the raw jump sum so that E L(t) = 0, -rate * E J.
  double compensator_drift() const {
    if (const auto* cp = compound_poisson_part()) return -cp->rate * jump_mean(cp->jumps);
    return 0.0;
  }

  /// E L(1)^2 (finite-variance models only).
  double variance_rate() const {
    if (is_stable()) return std::numeric_limits<double>::infinity();
    double v = sigma_ * sigma_;
    if (const auto* cp = compound_poisson_part()) v += cp->rate * jump_second_moment(cp->jumps);
    return v;
  }

  /// Fourth cumulant per unit time, rate * E J^4.
  double fourth_cumulant_rate() const {
    if (const auto* cp = compound_poisson_part()) return cp->rate * jump_fourth_moment(cp->jumps);
    return 0.0;
  }

  /// Self-similarity index: alpha for stable, 2 for pure Brownian, none otherwise.
  std::optional<double> self_similarity_index() const {
    if (const auto* st = stable_part()) return st->alpha;
    if (std::holds_alternative<NoJumps>(jumps_)) return 2.0;
    return std::nullopt;
  }

  /// True when E|L(1)|^p is finite.
  bool has_moment(double p) const {
    if (const auto* st = stable_part()) return p < st->alpha;
    return true;
  }

 private:
  void validate() const {
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw std::invalid_argument("sigma must be a nonnegative real");
    if (const auto* cp = compound_poisson_part()) {
      if (!(cp->rate > 0.0) || !std::isfinite(cp->rate)) throw std::invalid_argument("compound Poisson rate must be positive");
      if (const auto* n = std::get_if<NormalJumps>(&cp->jumps); n && !(n->sd >= 0.0))
        throw std::invalid_argument("normal jump sd must be nonnegative");
      if (const auto* u = std::get_if<UniformJumps>(&cp->jumps); u && !(u->upper > u->lower))
        throw std::invalid_argument("uniform jump bounds must satisfy lower < upper");
      if (const auto* c = std::get_if<CustomJumps>(&cp->jumps); c && !c->sample)
        throw std::invalid_argument("custom jump law needs a sampler");
    }
    if (const auto* st = stable_part()) {
      if (!(st->alpha > 1.0 && st->alpha < 2.0)) throw std::invalid_argument("stable index alpha must lie in (1, 2)");
      if (!(st->scale > 0.0) || !std::isfinite(st->scale)) throw std::invalid_argument("stable scale must be positive");
      if (sigma_ != 0.0) throw std::invalid_argument("stable models do not take a Gaussian part");
    }
  }

  double sigma_ = 0.0;
  JumpSpec jumps_ = NoJumps{};
};

/// Psi(u) = log E exp(i u L(1)).
inline std::complex<double> characteristic_exponent(const LevyModel& model, double u) {
  if (!std::isfinite(u)) throw std::invalid_argument("characteristic exponent needs a finite argument");
  std::complex<double> psi{-0.5 * model.sigma() * model.sigma() * u * u, 0.0};
  if (const auto* cp = model.compound_poisson_part()) {
    const std::complex<double> cf = jump_characteristic(cp->jumps, u);
    psi += cp->rate * (cf - 1.0 - std::complex<double>(0.0, u * jump_mean(cp->jumps)));
  }
  if (const auto* st = model.stable_part()) psi += -std::pow(st->scale * std::abs(u), st->alpha);
  return psi;
}

/// Exact draw of L(t) for a single time t >= 0.
inline double sample_increment(const LevyModel& model, double t, Rng& rng) {
  if (t <= 0.0) return 0.0;
  double x = 0.0;
  if (model.sigma() > 0.0) x += model.sigma() * std::sqrt(t) * std::normal_distribution<double>(0.0, 1.0)(rng);
  if (const auto* cp = model.compound_poisson_part()) {
    const auto count = std::poisson_distribution<std::uint64_t>(cp->rate * t)(rng);
    x += sample_jump_sum(cp->jumps, count, rng) + model.compensator_drift() * t;
  }
  if (const auto* st = model.stable_part())
    x += st->scale * std::pow(t, 1.0 / st->alpha) * symmetric_stable_variate(st->alpha, rng);
  return x;
}

// ---------------------------------------------------------------------------
// Grids and paths

struct Jump {
  double time = 0.0;
  double size = 0.0;
};

/// Uniform lattice {k * base_step} restricted to [left, right], joined with
/// left, 0, right and the extra times.
struct PathGrid {
  double left = 0.0;
  double right = 1.0;
  double base_step = 1.0 / 64.0;
  std::vector<double> extra_times;

  void validate() const {
    if (!(left <= 0.0) || !(right >= 0.0)) throw std::invalid_argument("grid must satisfy left <= 0 <= right");
    if (!(base_step > 0.0) || !std::isfinite(base_step)) throw std::invalid_argument("grid base step must be positive");
    if (!std::isfinite(left) || !std::isfinite(right)) throw std::invalid_argument("grid bounds must be finite");
  }

  std::int64_t first_index() const { return static_cast<std::int64_t>(std::ceil(left / base_step)); }
  std::int64_t last_index() const { return static_cast<std::int64_t>(std::floor(right / base_step)); }

  std::vector<double> times() const {
    validate();
    std::vector<double> out;
    for (std::int64_t k = first_index(); k <= last_index(); ++k) out.push_back(static_cast<double>(k) * base_step);
    out.push_back(left);
    out.push_back(0.0);
    out.push_back(right);
    for (double x : extra_times)
      if (x >= left && x <= right) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline constexpr std::int64_t kOffLattice = std::numeric_limits<std::int64_t>::min();

/// A càdlàg sample path on a node grid. values[i] is X(times[i]);
/// continuous[i] is the jump-free increment over (times[i], times[i+1]];
/// jump_sizes[i] is the jump at times[i]. Hence
/// values[i+1] = values[i] + continuous[i] + jump_sizes[i+1].
struct LevyPath {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> continuous;
  std::vector<double> jump_sizes;
  std::vector<std::int64_t> lattice;  // k with times[i] == k * base_step, else kOffLattice
  std::vector<Jump> jumps;            // ledger of nonzero jumps, sorted by time
  double base_step = 0.0;

  std::size_t size() const { return times.size(); }
  double left() const { return times.front(); }
  double right() const { return times.back(); }

  /// Index of the node at exactly `t`, if any.
  std::optional<std::size_t> node_index(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - times.begin());
  }

  /// X(t) under the càdlàg convention: value of the last node <= t.
  double value_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) throw std::out_of_range("time before path start");
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

using TwoSidedPath = LevyPath;

namespace detail {

/// Gap between a jump time and its companion node.
inline double companion_gap(double base_step) { return std::ldexp(base_step, -30); }

/// Samples one copy on [0, horizon] at the given base nodes (which start at
/// 0), embedding jump times. Each jump gets a companion node at
/// time - gap (companion_sign < 0) or time + gap (companion_sign > 0).
inline LevyPath sample_copy(const LevyModel& model, double horizon, std::vector<double> base_nodes,
                            double base_step, std::uint64_t seed, int companion_sign) {
  std::vector<double> jump_times;
  std::vector<double> sizes;
  if (const auto* cp = model.compound_poisson_part()) {
    Rng times_rng = make_rng(derive_seed(seed, Stream::jump_times));
    Rng sizes_rng = make_rng(derive_seed(seed, Stream::jump_sizes));
    std::exponential_distribution<double> wait(cp->rate);
    for (double t = wait(times_rng); t <= horizon; t += wait(times_rng)) {
      if (t <= 0.0) continue;
      jump_times.push_back(t);
      sizes.push_back(sample_jump(cp->jumps, sizes_rng));
    }
  }
  const double gap = companion_gap(base_step);
  std::vector<double> nodes = std::move(base_nodes);
  for (double t : jump_times) {
    nodes.push_back(t);
    const double c = t + companion_sign * gap;
    if (c > 0.0 && c < horizon) nodes.push_back(c);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  LevyPath path;
  path.base_step = base_step;
  path.times = nodes;
  const std::size_t n = nodes.size();
  path.values.assign(n, 0.0);
  path.continuous.assign(n > 0 ? n - 1 : 0, 0.0);
  path.jump_sizes.assign(n, 0.0);
  path.lattice.assign(n, kOffLattice);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = std::round(nodes[i] / base_step);
    if (k * base_step == nodes[i]) path.lattice[i] = static_cast<std::int64_t>(k);
  }
  for (std::size_t j = 0; j < jump_times.size(); ++j) {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), jump_times[j]);
    const auto idx = static_cast<std::size_t>(it - nodes.begin());
    path.jump_sizes[idx] += sizes[j];
  }

  Rng diffusion = make_rng(derive_seed(seed, Stream::diffusion));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double drift = model.compensator_drift();
  const auto* st = model.stable_part();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = nodes[i + 1] - nodes[i];
    double inc = drift * dt;
    if (model.sigma() > 0.0) inc += model.sigma() * std::sqrt(dt) * gauss(diffusion);
    if (st) inc += st->scale * std::pow(dt, 1.0 / st->alpha) * symmetric_stable_variate(st->alpha, diffusion);
    path.continuous[i] = inc;
    path.values[i + 1] = path.values[i] + inc + path.jump_sizes[i + 1];
  }
  for (std::size_t i = 0; i < n; ++i)
    if (path.jump_sizes[i] != 0.0) path.jumps.push_back({nodes[i], path.jump_sizes[i]});
  return path;
}

inline void check_one_sided_grid(double horizon, const PathGrid& grid) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
  grid.validate();
  if (grid.right < horizon) throw std::invalid_argument("grid does not cover [0, horizon]");
}

}  // namespace detail

/// One-sided path of L on [0, horizon] with its jump ledger.
inline LevyPath sample_one_sided(const LevyModel& model, double horizon, const PathGrid& grid, std::uint64_t seed) {
  detail::check_one_sided_grid(horizon, grid);
  std::vector<double> nodes;
  for (double t : grid.times())
    if (t >= 0.0 && t <= horizon) nodes.push_back(t);
  nodes.push_back(horizon);
  return detail::sample_copy(model, horizon, std::move(nodes), grid.base_step, seed, -1);
}

/// Two-sided path on [left, right]: copy 1 (seeded with `seed`) for t >= 0,
/// and X(t) = -X2(-(t-)) for t < 0 with an independent copy X2.
inline TwoSidedPath make_two_sided(const LevyModel& model, double left, double right, const PathGrid& grid,
                                   std::uint64_t seed) {
  if (!(left <= 0.0) || !(right >= 0.0)) throw std::invalid_argument("two-sided path needs left <= 0 <= right");
  PathGrid g = grid;
  g.left = std::min(grid.left, left);
  g.right = std::max(grid.right, right);
  g.validate();
  const std::vector<double> all = g.times();

  LevyPath positive;
  if (right > 0.0) {
    std::vector<double> nodes;
    for (double t : all)
      if (t >= 0.0 && t <= right) nodes.push_back(t);
    positive = detail::sample_copy(model, right, std::move(nodes), g.base_step, seed, -1);
  } else {
    positive.base_step = g.base_step;
    positive.times = {0.0};
    positive.values = {0.0};
    positive.jump_sizes = {0.0};
    positive.lattice = {0};
  }
  if (left == 0.0) return positive;

  std::vector<double> reflected;
  for (double t : all)
    if (t <= 0.0 && t >= left) reflected.push_back(-t);
  const LevyPath copy2 =
      detail::sample_copy(model, -left, std::move(reflected), g.base_step, derive_seed(seed, Stream::negative_side), +1);

  // copy2 nodes u_0 = 0 < ... < u_M = -left become times -u_M < ... < -u_1.
  // X(-u_m) = -X2(u_m-), the jump of X at -u_m is the jump of X2 at u_m,
  // and the continuous increment over [-u_{m+1}, -u_m] is that of X2 over
  // (u_m, u_{m+1}].
  TwoSidedPath out;
  out.base_step = g.base_step;
  const std::size_t m = copy2.size();
  for (std::size_t r = m - 1; r >= 1; --r) {
    out.times.push_back(-copy2.times[r]);
    out.values.push_back(-(copy2.values[r] - copy2.jump_sizes[r]));
    out.jump_sizes.push_back(copy2.jump_sizes[r]);
    out.lattice.push_back(copy2.lattice[r] == kOffLattice ? kOffLattice : -copy2.lattice[r]);
    out.continuous.push_back(copy2.continuous[r - 1]);
  }
  // The last negative node is followed by 0 (copy2's first cell); X(0) = 0.
  for (std::size_t i = 0; i < positive.size(); ++i) {
    out.times.push_back(positive.times[i]);
    out.values.push_back(positive.values[i]);
    out.jump_sizes.push_back(positive.jump_sizes[i]);
    out.lattice.push_back(positive.lattice[i]);
    if (i + 1 < positive.size()) out.continuous.push_back(positive.continuous[i]);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out.jump_sizes[i] != 0.0) out.jumps.push_back({out.times[i], out.jump_sizes[i]});
  return out;
}

// ---------------------------------------------------------------------------
// Sampler diagnostics

struct CharacteristicRow {
  double u = 0.0;
  std::complex<double> empirical;
  std::complex<double> theoretical;
  double deviation = 0.0;
  double std_error = 0.0;
};

struct SamplerValidation {
  std::vector<CharacteristicRow> rows;
  double max_deviation = 0.0;
  double std_error = 0.0;  // at the maximising u
  double max_z = 0.0;      // max over u of deviation / std_error
  bool within(double k_sigma) const {
    for (const auto& r : rows)
      if (r.deviation > k_sigma * r.std_error) return false;
    return true;
  }
};

/// Compares the empirical characteristic function of L(1), drawn through the
/// path sampler on a step-1/16 grid, with exp(Psi(u)).
inline SamplerValidation validate_sampler(const LevyModel& model, std::span<const double> u_grid, std::size_t n_paths,
                                          std::uint64_t seed, unsigned workers = 1) {
  if (n_paths < 1000) throw std::invalid_argument("validate_sampler needs at least 1000 paths");
  std::vector<double> endpoint(n_paths);
  const PathGrid grid{0.0, 1.0, 1.0 / 16.0, {}};
  parallel_for(n_paths, workers, [&](std::size_t i) {
    endpoint[i] = sample_one_sided(model, 1.0, grid, derive_seed(seed, i)).values.back();
  });
  SamplerValidation out;
  std::vector<double> c(n_paths), s(n_paths);
  for (double u : u_grid) {
    for (std::size_t i = 0; i < n_paths; ++i) {
      c[i] = std::cos(u * endpoint[i]);
      s[i] = std::sin(u * endpoint[i]);
    }
    const SampleMoments mc = sample_moments(c), ms = sample_moments(s);
    CharacteristicRow row;
    row.u = u;
    row.empirical = {mc.mean, ms.mean};
    row.theoretical = std::exp(characteristic_exponent(model, u));
    row.deviation = std::abs(row.empirical - row.theoretical);
    row.std_error = std::sqrt((mc.variance + ms.variance) / static_cast<double>(n_paths));
    if (row.deviation >= out.max_deviation) {
      out.max_deviation = row.deviation;
      out.std_error = row.std_error;
    }
    if (row.std_error > 0.0) out.max_z = std::max(out.max_z, row.deviation / row.std_error);
    out.rows.push_back(row);
  }
  return out;
}

/// Draws |L(t)| for n replicas (replica i seeded by derive_seed(seed, i)).
inline std::vector<double> sample_abs_increments(const LevyModel& model, double t, std::size_t n, std::uint64_t seed,
                                                 unsigned workers = 1) {
  std::vector<double> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng = make_rng(derive_seed(seed, i));
    out[i] = std::abs(sample_increment(model, t, rng));
  });
  return out;
}

/// ||L(t)||_p by Monte Carlo with a delta-method standard error.
inline NormEstimate moment_estimate(const LevyModel& model, double t, double p, std::size_t n_paths, std::uint64_t seed,
                                    const EstimatorConfig& estimator = {}, unsigned workers = 1) {
  if (!(t > 0.0)) throw std::invalid_argument("moment_estimate needs t > 0");
  if (!(p >= 1.0)) throw std::invalid_argument("moment_estimate needs p >= 1");
  if (!model.has_moment(p)) throw std::invalid_argument("p-th moment is infinite for this stable model (need p < alpha)");
  const auto xs = sample_abs_increments(model, t, n_paths, seed, workers);
  return p_norm_estimate(xs, p, estimator);
}

}  // namespace volterra

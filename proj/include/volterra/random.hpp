#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace volterra {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for replica or stream `index` of `base`. Depends only on the
/// pair, so Monte Carlo results do not depend on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Named sub-streams of a single path seed.
enum class Stream : std::uint64_t {
  diffusion = 1,
  jump_times = 2,
  jump_sizes = 3,
  negative_side = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, Stream s) noexcept {
  return derive_seed(base, static_cast<std::uint64_t>(s) << 56);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

/// Standard symmetric alpha-stable variate with characteristic function
/// exp(-|u|^alpha), by the Chambers-Mallows-Stuck transform.
inline double symmetric_stable_variate(double alpha, Rng& rng) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  std::uniform_real_distribution<double> angle(-half_pi, half_pi);
  std::exponential_distribution<double> expo(1.0);
  double v = 0.0;
  do {
    v = angle(rng);
  } while (std::cos(v) <= 0.0);
  double w = 0.0;
  do {
    w = expo(rng);
  } while (w <= 0.0);
  const double cv = std::cos(v);
  return std::sin(alpha * v) / std::pow(cv, 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

}  // namespace volterra

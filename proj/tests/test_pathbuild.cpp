#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/analysis.hpp"
#include "volterra/pathbuild.hpp"

using namespace volterra;

namespace {

// A lattice path on [left, right] with step h, a single jump of size `size`
// at `at` (a lattice point) and no diffusion.
TwoSidedPath one_jump_path(double left, double right, double h, double at, double size) {
  TwoSidedPath p;
  p.base_step = h;
  const auto k0 = static_cast<std::int64_t>(std::llround(left / h));
  const auto k1 = static_cast<std::int64_t>(std::llround(right / h));
  for (std::int64_t k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) * h;
    p.times.push_back(t);
    p.lattice.push_back(k);
    p.continuous.push_back(0.0);
    p.jump_sizes.push_back(t == at ? size : 0.0);
    p.values.push_back(t >= at ? size : 0.0);
  }
  p.jumps.push_back({at, size});
  return p;
}

TwoSidedPath scaled(TwoSidedPath p, double a) {
  for (auto& v : p.values) v *= a;
  for (auto& v : p.continuous) v *= a;
  for (auto& v : p.jump_sizes) v *= a;
  for (auto& j : p.jumps) j.size *= a;
  return p;
}

}  // namespace

TEST(Build, ZeroKernelGivesZero) {
  const PathGrid g{-4.0, 1.0, 1.0 / 32.0, {}};
  const auto X = make_two_sided(LevyModel::brownian(), -4.0, 1.0, g, 1);
  const auto tg = evaluation_times(X, 1.0);
  for (double v : build_ibp(Kernel::zero(), X, tg, 4.0).values) EXPECT_EQ(v, 0.0);
  for (double v : build_direct(Kernel::zero(), X, tg, 4.0).values) EXPECT_EQ(v, 0.0);
}

TEST(Build, IndicatorKernelReproducesDriver) {
  const PathGrid g{-2.0, 1.0, 1.0 / 64.0, {}};
  const auto m = LevyModel::compound_poisson(1.0, 3.0, NormalJumps{0.0, 1.0});
  const auto X = make_two_sided(m, -2.0, 1.0, g, 7);
  const auto tg = evaluation_times(X, 1.0);
  const auto M = build_ibp(Kernel::indicator(), X, tg, 2.0);
  const auto D = build_direct(Kernel::indicator(), X, tg, 2.0);
  for (std::size_t j = 0; j < tg.size(); ++j) {
    EXPECT_NEAR(M.values[j], X.value_at(tg[j]), 1e-12);
    EXPECT_NEAR(D.values[j], X.value_at(tg[j]), 1e-12);
  }
}

TEST(Build, OneJumpDriverIsExact) {
  const auto X = one_jump_path(-4.0, 2.0, 1.0 / 16.0, 0.5, 1.0);
  const auto tg = evaluation_times(X, 2.0);
  const auto k = Kernel::fractional(0.25);
  const auto M = build_ibp(k, X, tg, 4.0);
  const auto D = build_direct(k, X, tg, 4.0);
  for (std::size_t j = 0; j < tg.size(); ++j) {
    const double want = tg[j] >= 0.5 ? k.value(tg[j], 0.5) : 0.0;
    EXPECT_NEAR(M.values[j], want, 1e-12) << tg[j];
    EXPECT_NEAR(D.values[j], want, 1e-12) << tg[j];
  }
  // and for a jump on the negative side
  const auto Y = one_jump_path(-4.0, 2.0, 1.0 / 16.0, -1.5, 2.0);
  const auto N = build_ibp(k, Y, tg, 4.0);
  for (std::size_t j = 0; j < tg.size(); ++j) EXPECT_NEAR(N.values[j], 2.0 * k.value(tg[j], -1.5), 1e-12);
}

TEST(Build, LinearInTheDriver) {
  const PathGrid g{-8.0, 1.0, 1.0 / 32.0, {}};
  const auto m = LevyModel::compound_poisson(1.0, 2.0, NormalJumps{0.0, 1.0});
  const auto X = make_two_sided(m, -8.0, 1.0, g, 11);
  const auto X3 = scaled(X, -3.0);
  const auto tg = evaluation_times(X, 1.0);
  const auto k = Kernel::fractional(0.3);
  const auto a = build_ibp(k, X, tg, 8.0), b = build_ibp(k, X3, tg, 8.0);
  const auto c = build_direct(k, X, tg, 8.0), d = build_direct(k, X3, tg, 8.0);
  for (std::size_t j = 0; j < tg.size(); ++j) {
    EXPECT_NEAR(b.values[j], -3.0 * a.values[j], 1e-11 * (1.0 + std::abs(a.values[j])));
    EXPECT_NEAR(d.values[j], -3.0 * c.values[j], 1e-11 * (1.0 + std::abs(c.values[j])));
  }
}

TEST(Build, MovingAverageFastPathMatchesPlainSum) {
  // a custom copy of the fractional kernel has no moving-average form, so the
  // engine takes the plain O(n) path per t
  const auto fast = Kernel::fractional(0.25);
  const auto slow = Kernel::custom(
      "fd-copy", kMinusInfinity, [fast](double t, double s) { return fast.value(t, s); },
      [fast](double t, double s) { return fast.density(t, s); });
  const PathGrid g{-16.0, 1.0, 1.0 / 32.0, {}};
  const auto m = LevyModel::compound_poisson(1.0, 2.0, NormalJumps{0.0, 1.0});
  const auto X = make_two_sided(m, -16.0, 1.0, g, 5);
  const auto tg = evaluation_times(X, 1.0);
  const auto a = build_ibp(fast, X, tg, 16.0), b = build_ibp(slow, X, tg, 16.0);
  for (std::size_t j = 0; j < tg.size(); ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-10);
}

TEST(Build, CompactSupportBoundaryTerm) {
  // f = exp(-(t-s)) on s >= -1: IBP keeps f(t,tau)X(tau), direct integrates from tau
  const auto k = Kernel::shifted_support(Kernel::exponential(), -1.0);
  const auto X = one_jump_path(-4.0, 1.0, 1.0 / 16.0, -2.0, 1.0);  // jump before tau: invisible
  const auto tg = evaluation_times(X, 1.0);
  for (double v : build_ibp(k, X, tg, 4.0).values) EXPECT_NEAR(v, 0.0, 1e-14);
  for (double v : build_direct(k, X, tg, 4.0).values) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Build, Errors) {
  const auto X = one_jump_path(-2.0, 1.0, 0.25, 0.5, 1.0);
  const std::vector<double> tg{0.0, 0.5, 1.0};
  const auto k = Kernel::fractional(0.25);
  EXPECT_THROW(build_ibp(k, X, tg, 4.0), std::invalid_argument);    // grid does not reach -4
  EXPECT_THROW(build_ibp(k, X, tg, 1.1), std::invalid_argument);    // -1.1 is not a node
  EXPECT_THROW(build_ibp(k, X, tg, 0.0), std::invalid_argument);
  const std::vector<double> off{0.3};
  EXPECT_THROW(build_ibp(k, X, off, 2.0), std::invalid_argument);
  const std::vector<double> unsorted{1.0, 0.5};
  EXPECT_THROW(build_ibp(k, X, unsorted, 2.0), std::invalid_argument);
}

TEST(JumpRelation, UnitDiagonalAndFractional) {
  const auto m = LevyModel::compound_poisson(0.0, 10.0, NormalJumps{0.0, 1.0});
  const PathGrid g{-8.0, 2.0, 1.0 / 64.0, {}};
  const auto X = make_two_sided(m, -8.0, 2.0, g, 21);
  const auto tg = evaluation_times(X, 2.0);
  const auto expo = Kernel::exponential();
  const auto rep = extract_jump_relation(expo, X, build_ibp(expo, X, tg, 8.0));
  ASSERT_GE(rep.rows.size(), 10u);
  EXPECT_LE(rep.max_discrepancy, 1e-8);
  for (const auto& row : rep.rows) EXPECT_NEAR(row.path_jump, row.driver_jump, 1e-8);

  const auto fd = Kernel::fractional(0.25);
  const auto M = build_ibp(fd, X, tg, 8.0);
  const auto frep = extract_jump_relation(fd, X, M);
  EXPECT_EQ(frep.rows.size(), rep.rows.size());
  EXPECT_LE(frep.max_path_jump, 1e-3 * M.sup_abs());
}

TEST(Truncation, Budget) {
  const auto fd = Kernel::fractional(0.25);
  const WeightFunction w(0.6);
  const std::vector<double> tg{0.5, 1.0};
  const auto compact = Kernel::shifted_support(Kernel::exponential(), -2.0);
  const auto b = choose_truncation(compact, w, 1.0, 0.0, tg);
  EXPECT_EQ(b.N, 2.0);
  EXPECT_EQ(b.tail_bound, 0.0);
  EXPECT_TRUE(b.met);
  EXPECT_EQ(choose_truncation(fd, w, 1.0, std::numeric_limits<double>::infinity(), tg).N, 1.0);
  // tail ~ N^{d+q-1} = N^{-0.15}
  const double r = kernel_tail(fd, w, tg, 4096.0) / kernel_tail(fd, w, tg, 1024.0);
  EXPECT_NEAR(std::log(r) / std::log(4.0), -0.15, 0.01);
  const auto mid = choose_truncation(fd, w, 1.0, kernel_tail(fd, w, tg, 64.0) * 1.0001, tg);
  EXPECT_EQ(mid.N, 64.0);
  EXPECT_FALSE(choose_truncation(fd, w, 1.0, 1e-6, tg).met);
  EXPECT_THROW(choose_truncation(fd, w, -1.0, 0.1, tg), std::invalid_argument);
}

TEST(Truncation, DoublingNChangesMWithinTailBounds) {
  const auto fd = Kernel::fractional(0.25);
  const WeightFunction w(0.6);
  const double N = 16.0;
  const PathGrid g{-2 * N, 1.0, 1.0 / 32.0, {}};
  const auto X = make_two_sided(LevyModel::brownian(), -2 * N, 1.0, g, 8);
  double ws = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) ws = std::max(ws, std::abs(X.values[i]) / w(X.times[i]));
  const auto tg = evaluation_times(X, 1.0);
  const auto a = build_ibp(fd, X, tg, N), b = build_ibp(fd, X, tg, 2 * N);
  for (std::size_t j = 0; j < tg.size(); ++j) {
    const std::vector<double> t1{tg[j]};
    const double bound = ws * (kernel_tail(fd, w, t1, N) + kernel_tail(fd, w, t1, 2 * N));
    EXPECT_LE(std::abs(a.values[j] - b.values[j]), bound + 1e-12);
  }
}

TEST(CrossMethod, GapShrinksWithStep) {
  GridConfig grid{1.0 / 64.0, 32.0, false};
  const std::vector<double> steps{1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0};
  const auto rep = cross_method_check(LevyModel::brownian(), Kernel::fractional(0.25), 1.0, grid, steps, 30, 3);
  EXPECT_TRUE(rep.decreasing);
  EXPECT_LT(rep.levels.back().ratio, rep.levels.front().ratio * 0.8);
  // for a unit-diagonal smooth kernel both constructions converge at rate h^{1/2}
  const auto e = cross_method_check(LevyModel::brownian(), Kernel::exponential(), 1.0, grid, steps, 30, 3);
  EXPECT_TRUE(e.decreasing);
}

TEST(Continuity, IncrementsShrinkWithStep) {
  const auto fd = Kernel::fractional(0.25);
  auto max_increment = [&](double h) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 10; ++i) {
      const PathGrid g{-16.0, 1.0, h, {}};
      const auto X = make_two_sided(LevyModel::brownian(), -16.0, 1.0, g, derive_seed(2, i));
      const auto M = build_ibp(fd, X, evaluation_times(X, 1.0), 16.0);
      for (std::size_t j = 0; j + 1 < M.values.size(); ++j)
        worst = std::max(worst, std::abs(M.values[j + 1] - M.values[j]));
    }
    return worst;
  };
  EXPECT_LT(max_increment(1.0 / 512.0), max_increment(1.0 / 32.0));
}

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/kernels.hpp"

using namespace volterra;

namespace {

// High-precision references from tests/oracles/compute_oracles.py.
constexpr double kFd10 = 1.1032626513208372574;                // f_d(1, 0), d = 1/4
constexpr double kFd2h = 1.2209608288974107176;                // f_d(2, 1/2)
constexpr double kWeightedQ06N1024 = 2.7800182184566792711;    // int_{-1024}^1 phi_0.6 |df/ds|
constexpr double kWeightedQ06Inf = 3.267541715092372075;       // same, whole line
constexpr double kCondQ06Eps01N1024 = 3.4307960894682838233;   // integrability integral at t = 1
constexpr double kTailQ06N16 = 0.90355353073427867711;         // int_{-inf}^{-16} phi_0.6 |df/ds|
constexpr double kTailQ06N256 = 0.60001159543212280444;

const double kInf = std::numeric_limits<double>::infinity();

std::vector<double> decades(int per, int n_decades) {
  std::vector<double> s;
  for (int i = 0; i <= per * n_decades; ++i) s.push_back(std::pow(10.0, static_cast<double>(i) / per));
  return s;
}

std::vector<double> ladder() { return default_truncation_ladder(); }

}  // namespace

TEST(Weight, ValuesAndValidation) {
  const WeightFunction w(0.6);
  EXPECT_EQ(w(0.5), 1.0);
  EXPECT_EQ(w(-0.5), 1.0);
  EXPECT_NEAR(w(-32.0), std::pow(32.0, 0.6), 1e-12);
  EXPECT_THROW(WeightFunction(-0.1), std::invalid_argument);
}

TEST(Fractional, ClosedFormValues) {
  const auto k = Kernel::fractional(0.25);
  EXPECT_NEAR(k.value(1.0, 0.0), kFd10, 1e-15);
  EXPECT_NEAR(k.value(2.0, 0.5), kFd2h, 1e-15);
  for (double t : {0.0, 0.3, 1.0, 7.0}) EXPECT_EQ(k.diagonal(t), 0.0);
  // precision for s << 0: (u+t)^d - u^d ~ d t u^{d-1}
  const double u = 1e12;
  EXPECT_NEAR(k.value(1.0, -u) / (0.25 * std::pow(u, -0.75) / std::tgamma(1.25)), 1.0, 1e-9);
  EXPECT_THROW(Kernel::fractional(0.0), std::invalid_argument);
  EXPECT_THROW(Kernel::fractional(1.0), std::invalid_argument);
}

TEST(Fractional, TotalVariationIdentity) {
  // int |Gamma(d) df/ds (1, v)| dv = 2/d; with Gamma(d+1) the value is 2
  const auto k = Kernel::fractional(0.25);
  const double tv = weighted_density_at(k, WeightFunction(0.0), 1.0, kInf).value;
  EXPECT_NEAR(tv * std::tgamma(1.25), 2.0, 2e-4 * 2.0);
  EXPECT_NEAR(tv * std::tgamma(0.25), 8.0, 1e-4 * 8.0);
}

TEST(Kernels, VolterraPropertyAndSupport) {
  const std::vector<Kernel> ks{Kernel::zero(), Kernel::fractional(0.25), Kernel::exponential(2.0), Kernel::indicator(),
                               Kernel::shifted_support(Kernel::exponential(), -1.0)};
  for (const auto& k : ks) {
    for (double t : {0.0, 0.5, 2.0})
      for (double ds : {1e-12, 0.1, 5.0}) EXPECT_EQ(k.value(t, t + ds), 0.0) << k.name();
    if (k.bounded_support()) EXPECT_EQ(k.value(1.0, k.tau() - 1e-9), 0.0) << k.name();
  }
  const auto s = Kernel::shifted_support(Kernel::exponential(), -1.0);
  EXPECT_NEAR(s.boundary(1.0), std::exp(-2.0), 1e-15);
  EXPECT_EQ(Kernel::fractional(0.25).boundary(1.0), 0.0);
  EXPECT_THROW(Kernel::shifted_support(Kernel::indicator(), -1.0), std::invalid_argument);
}

TEST(Kernels, IncrementAdditivity) {
  const auto k = Kernel::fractional(0.4);
  for (double t : {0.5, 1.0, 3.0}) {
    const double a = -5.0, b = -0.7, c = 0.2;
    EXPECT_NEAR(k.increment(t, a, b) + k.increment(t, b, c), k.increment(t, a, c), 1e-12);
  }
}

TEST(Consistency, KnownValues) {
  const std::vector<IncrementSample> away{{1.0, -2.0, -1.0}};
  const auto k = Kernel::fractional(0.25);
  EXPECT_LE(consistency_check(k, away).max_rel_discrepancy, 1e-6);
  const std::vector<IncrementSample> straddle{{1.0, -0.5, 0.5}, {1.0, 0.25, 1.0}, {2.0, -1.0, 2.0}};
  const auto rep = consistency_check(k, straddle, 1e-5);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_rel_discrepancy, 1e-5);
  EXPECT_EQ(consistency_check(Kernel::zero(), away).max_abs_discrepancy, 0.0);
  const std::vector<IncrementSample> expo{{1.0, -3.0, 1.0}};
  EXPECT_TRUE(consistency_check(Kernel::exponential(0.7), expo).pass);
}

TEST(Decay, KnownValues) {
  const std::vector<double> tg{0.25, 0.5, 1.0};
  const auto s = decades(4, 4);
  EXPECT_EQ(check_decay(Kernel::zero(), WeightFunction(0.6), tg, s).verdict, Verdict::pass);
  const auto pass = check_decay(Kernel::fractional(0.25), WeightFunction(0.6), tg, s);
  EXPECT_EQ(pass.verdict, Verdict::pass);
  EXPECT_NEAR(pass.fitted_slope, -0.15, 0.01);
  const auto fail = check_decay(Kernel::fractional(0.25), WeightFunction(0.8), tg, s);
  EXPECT_EQ(fail.verdict, Verdict::fail);
  EXPECT_NEAR(fail.fitted_slope, 0.05, 0.01);
  // looser tolerance never turns a pass into a fail
  DecayTolerances loose{1.01, 1.0};
  EXPECT_EQ(check_decay(Kernel::fractional(0.25), WeightFunction(0.6), tg, s, loose).verdict, Verdict::pass);
  const std::vector<double> short_s{1.0, 10.0};
  EXPECT_THROW(check_decay(Kernel::zero(), WeightFunction(0.6), tg, short_s), std::invalid_argument);
}

TEST(Integrability, KnownValues) {
  const std::vector<double> tg{0.5, 1.0};
  const auto lad = ladder();
  const auto zero = check_density_integrability(Kernel::zero(), WeightFunction(0.6), 0.1, tg, lad);
  EXPECT_EQ(zero.verdict(), Verdict::pass);
  for (double v : zero.sup_integral) EXPECT_EQ(v, 0.0);
  const auto k = Kernel::fractional(0.25);
  EXPECT_EQ(check_density_integrability(k, WeightFunction(0.6), 0.1, tg, lad).verdict(), Verdict::pass);
  EXPECT_EQ(check_density_integrability(k, WeightFunction(0.8), 0.1, tg, lad).verdict(), Verdict::fail);
  // looser ladder tolerances keep the pass
  LadderTolerances loose{1e-2, 0.01, 4};
  EXPECT_EQ(check_density_integrability(k, WeightFunction(0.6), 0.1, tg, lad, loose).verdict(), Verdict::pass);
  EXPECT_THROW(check_density_integrability(k, WeightFunction(0.6), 0.0, tg, lad), std::invalid_argument);
}

TEST(Integrability, FrozenConditionIntegral) {
  const std::vector<double> t1{1.0}, n1024{1024.0};
  const auto rep = check_density_integrability(Kernel::fractional(0.25), WeightFunction(0.6), 0.1, t1, n1024);
  EXPECT_NEAR(rep.sup_integral.front() / kCondQ06Eps01N1024, 1.0, 1e-6);
}

TEST(Integrability, HalfAdmissibleEpsilonPassesAndBoundaryFails) {
  const std::vector<double> tg{1.0};
  const auto lad = ladder();
  for (auto [d, q] : {std::pair{0.25, 0.6}, std::pair{0.4, 0.55}, std::pair{0.1, 0.5}}) {
    const auto e = admissible_epsilon_fractional(d, q);
    ASSERT_TRUE(e);
    EXPECT_EQ(check_density_integrability(Kernel::fractional(d), WeightFunction(q), 0.5 * *e, tg, lad).verdict(),
              Verdict::pass)
        << d << " " << q;
  }
  EXPECT_EQ(check_density_integrability(Kernel::fractional(0.25), WeightFunction(0.8), 0.05, tg, lad).verdict(),
            Verdict::fail);
}

TEST(AdmissibleEpsilon, KnownValues) {
  EXPECT_NEAR(*admissible_epsilon_fractional(0.25, 0.6), 1.0 / 0.85 - 1.0, 1e-15);
  EXPECT_NEAR(*admissible_epsilon_fractional(0.25, 0.6), 0.17647058823529, 1e-12);
  EXPECT_FALSE(admissible_epsilon_fractional(0.25, 0.75).has_value());
  EXPECT_NEAR(*admissible_epsilon_fractional(0.4, 0.55), 1.0 / 0.95 - 1.0, 1e-15);
  EXPECT_FALSE(admissible_epsilon_fractional(0.25, 0.8).has_value());
}

TEST(WeightedDensity, FrozenValuesAndHolderBound) {
  const auto k = Kernel::fractional(0.25);
  const WeightFunction w(0.6);
  EXPECT_NEAR(weighted_density_at(k, w, 1.0, 1024.0).value / kWeightedQ06N1024, 1.0, 1e-7);
  EXPECT_NEAR(weighted_density_at(k, w, 1.0, kInf).value / kWeightedQ06Inf, 1.0, 1e-7);
  EXPECT_NEAR(weighted_density_tail(k, w, 1.0, 16.0).value / kTailQ06N16, 1.0, 1e-7);
  EXPECT_NEAR(weighted_density_tail(k, w, 1.0, 256.0).value / kTailQ06N256, 1.0, 1e-7);

  const std::vector<double> t1{1.0};
  const auto zero = weighted_density_integral(Kernel::zero(), w, t1, 1024.0, 0.1);
  EXPECT_EQ(zero.direct, 0.0);
  EXPECT_EQ(zero.sup_integral, 0.0);
  const auto rep = weighted_density_integral(k, w, t1, 1024.0, 0.1);
  EXPECT_NEAR(rep.direct / kWeightedQ06N1024, 1.0, 1e-7);
  EXPECT_TRUE(rep.bound_holds);
  // the bound holds for other kernels and horizons too
  const std::vector<double> tg{0.5, 1.0, 2.0};
  for (const auto& kk : {Kernel::exponential(1.0), Kernel::fractional(0.4),
                         Kernel::shifted_support(Kernel::exponential(0.5), -3.0)})
    EXPECT_TRUE(weighted_density_integral(kk, w, tg, 256.0, 0.1).bound_holds) << kk.name();
}

TEST(WeightedDensity, InverseSquareMass) {
  EXPECT_DOUBLE_EQ(inverse_square_mass(0.0), 2.0);
  EXPECT_DOUBLE_EQ(inverse_square_mass(1.0), 3.0);
  EXPECT_DOUBLE_EQ(inverse_square_mass(2.0), 3.5);
  EXPECT_THROW(inverse_square_mass(-1.0), std::invalid_argument);
}

TEST(KernelClass, CertifiesExampleAndRejectsBoundary) {
  const std::vector<double> tg{0.25, 0.5, 0.75, 1.0};
  const auto s = decades(4, 4);
  const auto lad = ladder();
  const auto good = certify_kernel_class(Kernel::fractional(0.25), WeightFunction(0.6), 0.088, tg, s, lad);
  EXPECT_EQ(good.verdict, Verdict::pass);
  EXPECT_TRUE(good.warnings.empty());
  const auto bad = certify_kernel_class(Kernel::fractional(0.25), WeightFunction(0.8), 0.05, tg, s, lad);
  EXPECT_EQ(bad.verdict, Verdict::fail);
  const auto custom = Kernel::custom(
      "user", kMinusInfinity, [](double t, double s) { return std::exp(-(t - s)); },
      [](double t, double s) { return std::exp(-(t - s)); });
  const auto rep = certify_kernel_class(custom, WeightFunction(0.6), 0.1, tg, s, lad);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(rep.verdict, Verdict::pass);
}

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/levy.hpp"

using namespace volterra;

namespace {

std::vector<double> endpoints(const LevyModel& m, double t, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  const PathGrid g{0.0, t, 1.0 / 16.0, {}};
  for (std::size_t i = 0; i < n; ++i) out[i] = sample_one_sided(m, t, g, derive_seed(seed, i)).values.back();
  return out;
}

}  // namespace

TEST(Model, ValidationErrors) {
  EXPECT_THROW(LevyModel::brownian(-1.0), std::invalid_argument);
  EXPECT_THROW(LevyModel::compound_poisson(0.0, 0.0, NormalJumps{0, 1}), std::invalid_argument);
  EXPECT_THROW(LevyModel::compound_poisson(0.0, 1.0, UniformJumps{1, 1}), std::invalid_argument);
  EXPECT_THROW(LevyModel::stable(2.0), std::invalid_argument);
  EXPECT_THROW(LevyModel::stable(1.5, 0.0), std::invalid_argument);
  EXPECT_THROW(LevyModel(1.0, SymmetricStable{1.5, 1.0}), std::invalid_argument);
}

TEST(Model, TripletDriftAndMoments) {
  const auto cp = LevyModel::compound_poisson(0.0, 2.0, TwoPointJumps{0.5});
  EXPECT_DOUBLE_EQ(cp.gamma(), 0.0);  // no jumps beyond 1
  EXPECT_DOUBLE_EQ(cp.variance_rate(), 0.5);
  const auto shifted = LevyModel::compound_poisson(0.0, 1.0, UniformJumps{0.0, 2.0});
  // E[J 1{|J|>1}] = int_1^2 x/2 dx = 3/4
  EXPECT_NEAR(shifted.gamma(), -0.75, 1e-15);
  EXPECT_NEAR(shifted.compensator_drift(), -1.0, 1e-15);
  EXPECT_EQ(LevyModel::stable(1.5).self_similarity_index(), 1.5);
  EXPECT_EQ(LevyModel::brownian().self_similarity_index(), 2.0);
  EXPECT_FALSE(cp.self_similarity_index().has_value());
  EXPECT_FALSE(LevyModel::stable(1.5).has_moment(1.5));
  EXPECT_TRUE(LevyModel::stable(1.5).has_moment(1.2));
}

TEST(Model, NormalTailMeanMatchesQuadratureFreeFormula) {
  // E[J 1{|J|>1}] for J ~ N(0.3, 1): mu (1 - P(|J|<=1)) + phi(1 - mu) - phi(-1 - mu) ... checked by sampling
  const NormalJumps j{0.3, 1.0};
  Rng rng = make_rng(11);
  const int n = 400000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_jump(j, rng);
    if (std::abs(x) > 1.0) acc += x;
  }
  EXPECT_NEAR(jump_tail_mean(j), acc / n, 5e-3);
}

TEST(CharacteristicExponent, KnownValues) {
  EXPECT_EQ(characteristic_exponent(LevyModel::brownian(), 0.0), std::complex<double>(0.0, 0.0));
  EXPECT_NEAR(characteristic_exponent(LevyModel::brownian(), 2.0).real(), -2.0, 1e-15);
  const auto cp = LevyModel::compound_poisson(0.0, 1.0, TwoPointJumps{1.0});
  const auto psi = characteristic_exponent(cp, 1.0);
  EXPECT_NEAR(psi.real(), std::cos(1.0) - 1.0, 1e-15);
  EXPECT_NEAR(psi.imag(), 0.0, 1e-15);
  EXPECT_NEAR(characteristic_exponent(LevyModel::stable(1.5, 2.0), 1.0).real(), -std::pow(2.0, 1.5), 1e-13);
}

TEST(Paths, BrownianVarianceAndNullModel) {
  const auto xs = endpoints(LevyModel::brownian(), 1.0, 10000, 1);
  double s2 = 0.0;
  for (double x : xs) s2 += x * x;
  EXPECT_NEAR(s2 / xs.size(), 1.0, 0.05);
  const PathGrid g{-2.0, 2.0, 0.25, {}};
  const auto null = make_two_sided(LevyModel::null_model(), -2.0, 2.0, g, 3);
  for (double v : null.values) EXPECT_EQ(v, 0.0);
}

TEST(Paths, CompoundPoissonVarianceAndCentring) {
  const auto m = LevyModel::compound_poisson(0.0, 1.0, NormalJumps{0.0, 1.0});
  const auto xs = endpoints(m, 1.0, 10000, 2);
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s2 / xs.size(), 1.0, 0.06);
  EXPECT_NEAR(s / xs.size(), 0.0, 4.0 / std::sqrt(10000.0));
  // nonzero-mean jumps are centred by the drift
  const auto biased = LevyModel::compound_poisson(0.5, 3.0, UniformJumps{0.0, 2.0});
  const auto ys = endpoints(biased, 1.0, 10000, 3);
  double m1 = 0.0;
  for (double y : ys) m1 += y;
  const double sd = std::sqrt(biased.variance_rate());
  EXPECT_NEAR(m1 / ys.size(), 0.0, 4.0 * sd / std::sqrt(10000.0));
}

TEST(Paths, TwoSidedStructure) {
  const auto m = LevyModel::compound_poisson(1.0, 2.0, NormalJumps{0.0, 1.0});
  const PathGrid g{-8.0, 2.0, 1.0 / 32.0, {}};
  const auto X = make_two_sided(m, -8.0, 2.0, g, 99);
  ASSERT_TRUE(X.node_index(0.0));
  EXPECT_EQ(X.values[*X.node_index(0.0)], 0.0);
  EXPECT_DOUBLE_EQ(X.left(), -8.0);
  EXPECT_DOUBLE_EQ(X.right(), 2.0);
  // ledger exactness: values rebuild from continuous parts plus jumps
  for (std::size_t i = 0; i + 1 < X.size(); ++i)
    EXPECT_NEAR(X.values[i + 1], X.values[i] + X.continuous[i] + X.jump_sizes[i + 1], 1e-10);
  // the ledger lists exactly the nonzero jump sizes
  std::size_t nonzero = 0;
  for (double j : X.jump_sizes) nonzero += j != 0.0;
  EXPECT_EQ(nonzero, X.jumps.size());
  for (const auto& j : X.jumps) {
    const auto i = X.node_index(j.time);
    ASSERT_TRUE(i);
    EXPECT_EQ(X.jump_sizes[*i], j.size);
  }
  // reproducibility
  const auto Y = make_two_sided(m, -8.0, 2.0, g, 99);
  EXPECT_EQ(X.values, Y.values);
  EXPECT_EQ(X.times, Y.times);
}

TEST(Paths, LeftZeroEqualsOneSided) {
  const auto m = LevyModel::compound_poisson(1.0, 1.0, NormalJumps{0.0, 1.0});
  const PathGrid g{0.0, 1.0, 1.0 / 16.0, {}};
  const auto a = make_two_sided(m, 0.0, 1.0, g, 5);
  const auto b = sample_one_sided(m, 1.0, g, 5);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.values, b.values);
}

TEST(Paths, SidesAreIndependent) {
  const auto m = LevyModel::brownian();
  const PathGrid g{-1.0, 1.0, 1.0 / 8.0, {}};
  const std::size_t n = 10000;
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto X = make_two_sided(m, -1.0, 1.0, g, derive_seed(17, i));
    prod[i] = X.value_at(-1.0) * X.value_at(1.0);
  }
  const auto sm = sample_moments(prod);
  EXPECT_LT(std::abs(sm.mean), 4.0 * sm.std_error());
}

TEST(Paths, GridErrors) {
  const PathGrid bad{0.5, 1.0, 0.1, {}};
  EXPECT_THROW(make_two_sided(LevyModel::brownian(), 0.5, 1.0, bad, 1), std::invalid_argument);
  const PathGrid zero_step{-1.0, 1.0, 0.0, {}};
  EXPECT_THROW(make_two_sided(LevyModel::brownian(), -1.0, 1.0, zero_step, 1), std::invalid_argument);
}

TEST(SamplerValidation, KnownValues) {
  const std::vector<double> u{0.5, 1.0, 2.0};
  const auto null = validate_sampler(LevyModel::null_model(), u, 1000, 1);
  EXPECT_EQ(null.max_deviation, 0.0);
  EXPECT_TRUE(validate_sampler(LevyModel::brownian(), u, 10000, 2).within(4.0));
  const std::vector<double> one{1.0};
  const auto st = validate_sampler(LevyModel::stable(1.5), one, 10000, 3);
  EXPECT_NEAR(std::real(st.rows[0].theoretical), std::exp(-1.0), 1e-14);
  EXPECT_TRUE(st.within(4.0));
  EXPECT_TRUE(validate_sampler(LevyModel::compound_poisson(0.5, 2.0, NormalJumps{0.2, 1.0}), u, 10000, 4).within(4.0));
  EXPECT_THROW(validate_sampler(LevyModel::brownian(), u, 10, 1), std::invalid_argument);
}

TEST(MomentEstimate, KnownValues) {
  EXPECT_EQ(moment_estimate(LevyModel::null_model(), 1.0, 2.0, 100, 1).estimate, 0.0);
  const auto two = moment_estimate(LevyModel::brownian(), 1.0, 2.0, 20000, 2);
  EXPECT_NEAR(two.estimate, 1.0, 4 * two.std_error);
  const auto four = moment_estimate(LevyModel::brownian(), 4.0, 4.0, 20000, 3);
  EXPECT_NEAR(four.estimate, std::pow(3.0 * 16.0, 0.25), 4 * four.std_error);
  EXPECT_THROW(moment_estimate(LevyModel::stable(1.5), 1.0, 1.6, 100, 1), std::invalid_argument);
}

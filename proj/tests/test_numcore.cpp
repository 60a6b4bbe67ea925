#include <gtest/gtest.h>

#include "printers.hpp"

#include <cmath>
#include <set>

#include "moco/adam.hpp"
#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/gradcheck.hpp"
#include "moco/rng.hpp"
#include "moco/sampling.hpp"
#include "moco/vector.hpp"
#include "oracles.hpp"

using namespace moco;

TEST(Vector, ArithmeticAndDimensionChecks) {
  Vector a{1.0, 2.0};
  const Vector b{3.0, -1.0};
  EXPECT_EQ(a + b, (Vector{4.0, 1.0}));
  EXPECT_EQ(a - b, (Vector{-2.0, 3.0}));
  EXPECT_EQ(2.0 * a, (Vector{2.0, 4.0}));
  EXPECT_DOUBLE_EQ(dot(a, b), 1.0);
  axpy(0.5, b, a);
  EXPECT_EQ(a, (Vector{2.5, 1.5}));
  EXPECT_DOUBLE_EQ(max_abs_diff(a, b), 2.5);
  EXPECT_THROW(a += Vector(3), ContractViolation);
  EXPECT_THROW(dot(a, Vector(1)), ContractViolation);
}

TEST(Vector, FiniteCheck) {
  EXPECT_TRUE((Vector{0.0, 1.0}).all_finite());
  EXPECT_FALSE((Vector{0.0, std::nan("")}).all_finite());
  EXPECT_FALSE((Vector{INFINITY}).all_finite());
}

TEST(Rng, EqualSeedsGiveEqualStreams) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    ASSERT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, RangesAndSplitIndependence) {
  Rng r(7);
  for (int i = 0; i < 5000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(13), 13u);
  }
  // Splitting never advances the parent.
  Rng p(9);
  const auto before = p.counter();
  Rng child = p.split(3);
  EXPECT_EQ(p.counter(), before);
  Rng again = Rng(9).split(3);
  EXPECT_EQ(child.next_u64(), again.next_u64());
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(r.normal());
  const auto [mean, sd] = oracle::mean_std(xs);
  EXPECT_NEAR(mean, 0.0, 0.03);
  EXPECT_NEAR(sd, 1.0, 0.03);
}

TEST(Rng, DeriveSeedIsStableAndNameSensitive) {
  EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
  std::set<std::uint64_t> seen;
  for (const char* name : {"a", "b", "curve-opt"}) {
    for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(1, name, i));
  }
  EXPECT_EQ(seen.size(), 12u);
  // FNV-1a reference values.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Adam, FirstStepMatchesHandComputation) {
  AdamState s(1);
  const Vector p = adam_step(s, Vector{0.0}, Vector{1.0});
  // m_hat = v_hat = 1, so the step is lr / (1 + eps) = 0.0099999999.
  EXPECT_NEAR(p[0], -0.01 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(p[0], -0.00999999995, 1e-10);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, TwoStepsMatchScalarOracle) {
  AdamState s(1);
  Vector p{0.0};
  p = adam_step(s, p, Vector{1.0});
  p = adam_step(s, p, Vector{1.0});
  EXPECT_NEAR(p[0], oracle::adam_scalar(0.0, {1.0, 1.0}), 1e-15);
  EXPECT_NEAR(p[0], -0.0199999, 1e-7);
}

TEST(Adam, ZeroGradientIsIdentityForAllSteps) {
  AdamState s(3);
  Vector p{0.3, -1.0, 2.0};
  for (int i = 0; i < 50; ++i) {
    const Vector q = adam_step(s, p, Vector(3));
    ASSERT_EQ(q, p);
    ASSERT_EQ(s.step, static_cast<std::uint64_t>(i + 1));
  }
}

TEST(Adam, MatchesOracleOnRandomGradientSequence) {
  Rng r(5);
  std::vector<double> grads;
  for (int i = 0; i < 40; ++i) grads.push_back(r.uniform(-3.0, 3.0));
  AdamState s(1);
  Vector p{0.7};
  for (double g : grads) p = adam_step(s, p, Vector{g});
  EXPECT_NEAR(p[0], oracle::adam_scalar(0.7, grads), 1e-13);
}

TEST(Adam, DimensionMismatchThrows) {
  AdamState s(2);
  EXPECT_THROW(adam_step(s, Vector(2), Vector(3)), ContractViolation);
  EXPECT_THROW(adam_step(s, Vector(3), Vector(3)), ContractViolation);
}

TEST(FiniteDiff, Examples) {
  auto sq = [](const Vector& x) { return dot(x, x); };
  const Vector g = finite_diff_grad(sq, Vector{1.0, 2.0}, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);
  const Vector z = finite_diff_grad([](const Vector&) { return 3.0; }, Vector{1.0, 2.0, 3.0}, 1e-5);
  EXPECT_EQ(z, Vector(3));
  const Vector m = finite_diff_grad([](const Vector& x) { return x[0] * x[1]; }, Vector{3.0, 5.0}, 1e-5);
  EXPECT_NEAR(m[0], 5.0, 1e-8);
  EXPECT_NEAR(m[1], 3.0, 1e-8);
}

TEST(FiniteDiff, NonFiniteValueIsAnError) {
  auto f = [](const Vector& x) { return x[0] > 1.0 ? std::nan("") : x[0]; };
  EXPECT_THROW(finite_diff_grad(f, Vector{1.0}, 1e-5), FormatError);
  EXPECT_THROW(finite_diff_grad(f, Vector{0.0}, 0.0), ContractViolation);
}

TEST(FiniteDiff, RelativeError) {
  EXPECT_DOUBLE_EQ(max_relative_error(Vector{1.0, 2.0}, Vector{1.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(max_relative_error(Vector(2), Vector(2)), 0.0);
  EXPECT_DOUBLE_EQ(max_relative_error(Vector{1.0, 4.0}, Vector{1.0, 3.0}), 0.25);
}

TEST(Sampling, DegenerateBallIsZero) {
  Rng r(1);
  for (Norm n : kAllNorms) EXPECT_EQ(sample_uniform_ball(r, 5, Budget(n, 0.0)), Vector(5));
}

TEST(Sampling, LinfCoordinatesInBox) {
  Rng r(2);
  const Vector v = sample_uniform_ball(r, 3, Budget(Norm::Linf, 0.1));
  for (double x : v) {
    EXPECT_GE(x, -0.1);
    EXPECT_LE(x, 0.1);
  }
}

TEST(Sampling, L2MembershipOverThousandDraws) {
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_LE(norm_p(sample_uniform_ball(r, 8, Budget(Norm::L2, 1.0)), Norm::L2), 1.0 + 1e-12);
  }
}

class SamplingProperty : public ::testing::TestWithParam<Norm> {};

TEST_P(SamplingProperty, TenThousandDrawsStayInBall) {
  Rng r(derive_seed(4, norm_name(GetParam()), 0));
  const Budget b(GetParam(), 0.37);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 1 + r.below(12);
    const Vector v = sample_uniform_ball(r, dim, b);
    ASSERT_EQ(v.dim(), dim);
    ASSERT_LE(norm_p(v, b.norm), b.epsilon * (1.0 + 1e-9));
  }
}

INSTANTIATE_TEST_SUITE_P(AllNorms, SamplingProperty, ::testing::ValuesIn(kAllNorms),
                         [](const auto& info) { return std::string(norm_name(info.param)); });

TEST(Sampling, L2RadiusDistribution) {
  // Uniform in the 2-D disc: P(r <= 1/2) = 1/4.
  Rng r(8);
  int inner = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) inner += norm_p(sample_uniform_ball(r, 2, Budget(Norm::L2, 1.0)), Norm::L2) <= 0.5;
  EXPECT_NEAR(inner / static_cast<double>(n), 0.25, 0.015);
}

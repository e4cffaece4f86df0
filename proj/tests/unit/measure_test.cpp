#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jumpkit/errors.hpp"
#include "jumpkit/measure.hpp"
#include "oracles.hpp"
#include "random.hpp"

namespace jumpkit {
namespace {

std::vector<VelocityMeasure> shipped_measures() {
  return {VelocityMeasure::uniform_ball(2, 1.0), VelocityMeasure::uniform_ball(3, 1.0),
          VelocityMeasure::uniform_interval(-1.0, 1.0),
          VelocityMeasure::uniform_interval(-0.5, 2.0),
          VelocityMeasure::atomic({{{-1.0}, 0.25}, {{1.0}, 0.75}}),
          VelocityMeasure::atomic({{{1.0, 0.0}, 1.0 / 3}, {{-0.5, 0.8}, 1.0 / 3}, {{-0.5, -0.8}, 1.0 / 3}}),
          VelocityMeasure::tabulated_radial(2, {0.0, 0.5, 1.0}, {1.0, 2.0, 0.0})};
}

void expect_error(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Measure, ConstructionRejectsInvalidInput) {
  expect_error(ErrorCode::InvalidMeasure, [] { VelocityMeasure::uniform_ball(0, 1.0); });
  expect_error(ErrorCode::InvalidMeasure, [] { VelocityMeasure::uniform_ball(2, -1.0); });
  expect_error(ErrorCode::InvalidMeasure, [] { VelocityMeasure::uniform_interval(0.5, 1.0); });
  expect_error(ErrorCode::InvalidMeasure, [] { VelocityMeasure::uniform_interval(1.0, -1.0); });
  expect_error(ErrorCode::InvalidMeasure, [] { VelocityMeasure::atomic({{{1.0}, 1.0}}); });
  expect_error(ErrorCode::InvalidMeasure,
               [] { VelocityMeasure::atomic({{{-1.0}, 0.5}, {{1.0}, 0.4}}); });
  expect_error(ErrorCode::InvalidMeasure,
               [] { VelocityMeasure::atomic({{{-1.0}, 0.5}, {{1.0, 0.0}, 0.5}}); });
  expect_error(ErrorCode::InvalidMeasure,
               [] { VelocityMeasure::tabulated_radial(2, {0.0, 1.0}, {-1.0, 1.0}); });
}

TEST(Measure, DegenerateHullIsOptIn) {
  const auto m = VelocityMeasure::atomic({{{1.0}, 1.0}}, true);
  EXPECT_EQ(m.dimension(), 1);
  EXPECT_NE(m.fingerprint().find("degenerate_hull"), std::string::npos);
}

TEST(Measure, SupportFunctionClosedForms) {
  const auto ball = VelocityMeasure::uniform_ball(3, 2.0);
  const Vec p{1.0, 2.0, 2.0};
  EXPECT_NEAR(support_value(ball, p), 6.0, 1e-14);
  const auto q = support_mu(ball, p);
  ASSERT_EQ(q.maximizers.size(), 1u);
  EXPECT_NEAR(q.maximizers[0][0], 2.0 / 3, 1e-14);

  const auto interval = VelocityMeasure::uniform_interval(-0.5, 2.0);
  EXPECT_DOUBLE_EQ(support_value(interval, Vec{3.0}), 6.0);
  EXPECT_DOUBLE_EQ(support_value(interval, Vec{-3.0}), 1.5);

  const auto square = VelocityMeasure::atomic({{{1.0, 1.0}, 0.25}, {{1.0, -1.0}, 0.25},
                                               {{-1.0, 1.0}, 0.25}, {{-1.0, -1.0}, 0.25}});
  const auto face = support_mu(square, Vec{1.0, 0.0});
  EXPECT_EQ(face.shape, ArgmaxShape::Face);
  EXPECT_EQ(face.maximizers.size(), 2u);
  EXPECT_EQ(support_mu(square, Vec{0.0, 0.0}).shape, ArgmaxShape::Whole);
}

TEST(Measure, MeanAndQuadratureWeights) {
  const auto interval = VelocityMeasure::uniform_interval(-0.5, 2.0, 64);
  EXPECT_NEAR(interval.mean()[0], 0.75, 1e-14);
  const auto q = interval.velocity_quadrature();
  double mass = 0.0;
  double first = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    mass += q.weights[k];
    first += q.weights[k] * q.nodes[k];
  }
  EXPECT_NEAR(mass, 1.0, 1e-14);
  EXPECT_NEAR(first, 0.75, 1e-14);
  EXPECT_TRUE(std::is_sorted(q.nodes.begin(), q.nodes.end()));

  const auto atoms = VelocityMeasure::atomic({{{-1.0}, 0.25}, {{1.0}, 0.75}});
  EXPECT_NEAR(atoms.mean()[0], 0.5, 1e-15);
}

TEST(Measure, TabulatedUniformProfileMatchesBall) {
  const auto ball = VelocityMeasure::uniform_ball(3, 1.0);
  const auto tab = VelocityMeasure::tabulated_radial(3, {0.0, 1.0}, {5.0, 5.0});
  for (double r : {0.5, 1.0, 2.0}) {
    const Vec p{r, 0.0, 0.0};
    EXPECT_NEAR(singular_integral(tab, p), singular_integral(ball, p), 1e-9) << r;
    EXPECT_NEAR(resolvent_integral(tab, p, r), resolvent_integral(ball, p, r), 1e-12) << r;
  }
  EXPECT_NEAR(tab.density(Vec{0.2, 0.1, 0.0}), ball.density(Vec{0.2, 0.1, 0.0}), 1e-12);
}

TEST(Measure, FingerprintIsStable) {
  EXPECT_EQ(VelocityMeasure::uniform_ball(3, 1.0).fingerprint(), "uniform_ball;n=3;r=1;q=200");
  EXPECT_EQ(VelocityMeasure::uniform_interval(-1, 1, 64).fingerprint(),
            "uniform_interval;n=1;a=-1;b=1;q=64");
}

TEST(Measure, OneDimensionalSingularIntegralDiverges) {
  EXPECT_TRUE(std::isinf(singular_integral(VelocityMeasure::uniform_interval(-1, 1), Vec{3.0})));
  EXPECT_TRUE(std::isinf(singular_integral(VelocityMeasure::uniform_ball(1, 1.0), Vec{3.0})));
}

// Properties.

TEST(MeasureProperty, SupportIsPositivelyHomogeneous) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lambda(0.01, 50.0);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 5.0);
      const double l = lambda(rng);
      const double lhs = support_value(m, scaled(p, l));
      const double rhs = l * support_value(m, p);
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs))) << m.fingerprint();
    }
  }
}

TEST(MeasureProperty, SupportIsSubadditive) {
  std::mt19937_64 rng(2);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 5.0);
      const Vec q = testing::random_in_ball(rng, m.dimension(), 5.0);
      Vec s(p.size());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = p[i] + q[i];
      EXPECT_LE(support_value(m, s), support_value(m, p) + support_value(m, q) + 1e-12)
          << m.fingerprint();
    }
  }
}

TEST(MeasureProperty, ResolventIsStrictlyDecreasing) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 4.0);
      const double floor = support_value(m, p) - 1.0;
      const double h1 = floor + 1e-3 + 2.0 * unit(rng);
      const double h2 = h1 + 1e-3 + 2.0 * unit(rng);
      EXPECT_GT(resolvent_integral(m, p, h1), resolvent_integral(m, p, h2)) << m.fingerprint();
    }
  }
}

TEST(MeasureProperty, BallSingularIntegralScaling) {
  for (int n : {2, 3, 4}) {
    const auto m = VelocityMeasure::uniform_ball(n, 1.0);
    for (double r : {0.5, 1.0, 2.0}) {
      Vec p(n, 0.0);
      p[n - 1] = r;
      EXPECT_NEAR(singular_integral(m, p) * r, n / (n - 1.0), 1e-8) << n << ' ' << r;
      EXPECT_NEAR(singular_integral(m, p), oracle::ball_singular_integral(n, r), 1e-8);
    }
  }
}

TEST(MeasureProperty, BallResolventMatchesIndependentQuadrature) {
  for (int n : {1, 2, 3, 4}) {
    const auto m = VelocityMeasure::uniform_ball(n, 1.0);
    for (double r : {0.3, 1.0, 2.5}) {
      for (double h : {r - 0.9, r - 0.5, r + 1.0}) {
        Vec p(n, 0.0);
        p[0] = r;
        EXPECT_NEAR(resolvent_integral(m, p, h), oracle::ball_resolvent(n, r, h), 1e-10)
            << n << ' ' << r << ' ' << h;
      }
    }
  }
}

TEST(MeasureProperty, QuadratureOrderConverged) {
  const std::vector<std::pair<VelocityMeasure, VelocityMeasure>> pairs{
      {VelocityMeasure::uniform_ball(2, 1.0, 200), VelocityMeasure::uniform_ball(2, 1.0, 400)},
      {VelocityMeasure::uniform_ball(3, 1.0, 200), VelocityMeasure::uniform_ball(3, 1.0, 400)},
      {VelocityMeasure::uniform_interval(-1, 1, 200), VelocityMeasure::uniform_interval(-1, 1, 400)},
      {VelocityMeasure::tabulated_radial(2, {0.0, 0.5, 1.0}, {1.0, 2.0, 0.0}, 200),
       VelocityMeasure::tabulated_radial(2, {0.0, 0.5, 1.0}, {1.0, 2.0, 0.0}, 400)}};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> gap(0.1, 2.0);
  for (const auto& [a, b] : pairs) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vec p = testing::random_in_ball(rng, a.dimension(), 3.0);
      const double h = support_value(a, p) - 1.0 + gap(rng);
      EXPECT_NEAR(resolvent_integral(a, p, h), resolvent_integral(b, p, h), 1e-9)
          << a.fingerprint();
    }
  }
}

}  // namespace
}  // namespace jumpkit

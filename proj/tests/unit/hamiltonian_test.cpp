#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jumpkit/errors.hpp"
#include "jumpkit/hamiltonian.hpp"
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

Vec midpoint(const Vec& a, const Vec& b) {
  Vec m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

TEST(Hamiltonian, IntervalMatchesClosedForm) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  for (double p = -5.0; p <= 5.0; p += 0.0625) {
    EXPECT_NEAR(solve_H(m, Vec{p}).H, oracle::interval_H(p), 1e-9) << p;
  }
}

TEST(Hamiltonian, BallMatchesIndependentRootFinder) {
  for (int n : {1, 2, 3, 4}) {
    const auto m = VelocityMeasure::uniform_ball(n, 1.0);
    for (double r : {0.1, 0.7, 1.2, 1.9, 2.5, 4.0}) {
      Vec p(n, 0.0);
      p[0] = r;
      EXPECT_NEAR(solve_H(m, p).H, oracle::ball_H(n, r), 1e-9) << n << ' ' << r;
    }
  }
}

TEST(Hamiltonian, TwoAtomsMatchQuadraticRoot) {
  const auto m = VelocityMeasure::atomic({{{-1.0}, 0.25}, {{1.0}, 0.75}});
  for (double p = -4.0; p <= 4.0; p += 0.25) {
    EXPECT_NEAR(solve_H(m, Vec{p}).H, oracle::two_atom_H(-1.0, 0.25, 1.0, 0.75, p), 1e-10) << p;
  }
}

TEST(Hamiltonian, SingularBranchExamples) {
  const auto m = VelocityMeasure::uniform_ball(3, 1.0);
  const auto e = solve_H(m, Vec{2.0, 0.0, 0.0});
  EXPECT_EQ(e.regime, Regime::Singular);
  EXPECT_DOUBLE_EQ(e.H, 1.0);
  EXPECT_NEAR(e.grad[0], 1.0, 1e-12);
  EXPECT_EQ(solve_H(m, Vec{1.4, 0.0, 0.0}).regime, Regime::Regular);
  EXPECT_EQ(solve_H(m, Vec{0.0, 0.0, 0.0}).H, 0.0);
}

TEST(Hamiltonian, SingBoundaryRadius) {
  for (int n : {2, 3, 4}) {
    const auto m = VelocityMeasure::uniform_ball(n, 1.0);
    Vec d(n, 1.0 / std::sqrt(n));
    EXPECT_NEAR(sing_boundary_radius(m, d), n / (n - 1.0), 1e-8) << n;
  }
  EXPECT_TRUE(std::isinf(sing_boundary_radius(VelocityMeasure::uniform_interval(-1, 1), Vec{1.0})));
}

TEST(Hamiltonian, EigenAtomWeight) {
  const auto m = VelocityMeasure::uniform_ball(3, 1.0);
  const auto singular = eigenpair(m, Vec{3.0, 0.0, 0.0});
  EXPECT_NEAR(singular.atom_weight, 0.5, 1e-8);
  ASSERT_TRUE(singular.atom_location.has_value());
  EXPECT_NEAR((*singular.atom_location)[0], 1.0, 1e-15);
  EXPECT_NEAR(eigenpair(m, Vec{1.5, 0.0, 0.0}).atom_weight, 0.0, 1e-8);
  EXPECT_EQ(eigenpair(m, Vec{1.0, 0.0, 0.0}).atom_weight, 0.0);
}

TEST(Hamiltonian, LegendreIntervalMatchesBrent) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  for (double v : {-0.9, -0.5, 0.0, 0.25, 0.5, 0.8, 0.95}) {
    const auto [L, p] = oracle::legendre_1d(oracle::interval_H, v, -60.0, 60.0);
    const auto e = legendre(m, Vec{v});
    EXPECT_NEAR(e.L, L, 1e-9) << v;
    EXPECT_NEAR(e.argmax_p[0], p, 1e-4 * (1.0 + std::abs(p))) << v;
  }
  EXPECT_NEAR(legendre(m, Vec{0.5}).L, 0.195314727916, 1e-11);
}

TEST(Hamiltonian, LegendreOutsideHullThrows) {
  const auto m = VelocityMeasure::uniform_ball(2, 1.0);
  try {
    legendre(m, Vec{1.2, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutsideHull);
  }
}

TEST(Hamiltonian, LegendreVanishesAtMean) {
  for (const auto& m : shipped_measures()) {
    EXPECT_NEAR(legendre(m, m.mean()).L, 0.0, 1e-9) << m.fingerprint();
  }
}

// Properties.

TEST(HamiltonianProperty, Dichotomy) {
  std::mt19937_64 rng(11);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 4.0);
      const auto e = solve_H(m, p);
      const bool regular = e.residual <= 1e-10 && e.H > e.mu - 1.0 + 1e-12;
      const bool singular = e.H == e.mu - 1.0 && singular_integral(m, p) <= 1.0 + 1e-8;
      EXPECT_NE(regular, singular) << m.fingerprint() << ' ' << format_vec(p);
      EXPECT_EQ(singular, e.regime == Regime::Singular);
    }
  }
}

TEST(HamiltonianProperty, MidpointConvexity) {
  std::mt19937_64 rng(12);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 4.0);
      const Vec q = testing::random_in_ball(rng, m.dimension(), 4.0);
      const double mid = solve_H(m, midpoint(p, q)).H;
      EXPECT_LE(mid, 0.5 * (solve_H(m, p).H + solve_H(m, q).H) + 1e-9) << m.fingerprint();
    }
  }
}

TEST(HamiltonianProperty, LowerEnvelope) {
  std::mt19937_64 rng(13);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 300; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 6.0);
      EXPECT_GE(solve_H(m, p).H, support_value(m, p) - 1.0 - 1e-12) << m.fingerprint();
    }
  }
}

TEST(HamiltonianProperty, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  const double step = 1e-5;
  for (const auto& m : shipped_measures()) {
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 60; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 4.0);
      if (classify(m, p) != Regime::Regular) continue;
      const double boundary = sing_boundary_radius(m, scaled(p, 1.0 / norm(p)));
      if (std::isfinite(boundary) && std::abs(norm(p) - boundary) < 0.1) continue;
      const Vec g = grad_H(m, p);
      for (int i = 0; i < m.dimension(); ++i) {
        Vec hi = p;
        Vec lo = p;
        hi[i] += step;
        lo[i] -= step;
        const double fd = (solve_H(m, hi).H - solve_H(m, lo).H) / (2.0 * step);
        EXPECT_NEAR(g[i], fd, 1e-6) << m.fingerprint() << ' ' << format_vec(p);
      }
      ++checked;
    }
    EXPECT_GT(checked, 20) << m.fingerprint();
  }
}

TEST(HamiltonianProperty, FenchelYoung) {
  std::mt19937_64 rng(15);
  for (const auto& m : shipped_measures()) {
    for (int trial = 0; trial < 60; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 3.0);
      const Vec v = testing::random_in_ball(rng, m.dimension(), 0.45);
      const double L = legendre(m, v).L;
      EXPECT_GE(L + solve_H(m, p).H, dot(p, v) - 1e-9) << m.fingerprint();

      const auto e = solve_H(m, p);
      if (e.regime != Regime::Regular) continue;
      EXPECT_NEAR(legendre(m, e.grad).L + e.H, dot(p, e.grad), 1e-6) << m.fingerprint();
    }
  }
}

TEST(HamiltonianProperty, EigenIdentity) {
  std::mt19937_64 rng(16);
  for (const auto& m : shipped_measures()) {
    if (m.kind() == MeasureKind::Atomic) continue;
    for (int trial = 0; trial < 50; ++trial) {
      const Vec p = testing::random_in_ball(rng, m.dimension(), 3.0);
      const auto e = eigenpair(m, p);
      if (e.regime != Regime::Regular) continue;
      // (H - v.p + 1) Q(v) must equal the jump term int M Q, which for
      // Q = c / (1 + H - v.p) is c F(H).
      const double jump_term = e.density_scale * resolvent_integral(m, p, e.H);
      EXPECT_NEAR(jump_term, e.density_scale, 1e-10) << m.fingerprint();
      EXPECT_NEAR(jump_term + e.atom_weight, 1.0, 1e-10);
    }
  }
}

TEST(HamiltonianProperty, GradientJumpAtSingBoundary) {
  const auto m = VelocityMeasure::uniform_ball(3, 1.0);
  const double inside = grad_H(m, Vec{1.5 - 1e-3, 0.0, 0.0})[0];
  EXPECT_GT(1.0 - inside, 0.1);
  EXPECT_NEAR(grad_H(m, Vec{1.5 + 1e-3, 0.0, 0.0})[0], 1.0, 1e-12);
}

}  // namespace
}  // namespace jumpkit

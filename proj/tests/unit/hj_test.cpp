#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jumpkit/errors.hpp"
#include "jumpkit/hj_solver.hpp"
#include "oracles.hpp"

namespace jumpkit {
namespace {

const VelocityMeasure& interval() {
  static const VelocityMeasure m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  return m;
}

double tent(std::span<const double> x) { return std::min(std::abs(x[0]), 1.0); }

GridField sample_1d(const Potential& phi0, double lower, double dx, std::size_t n) {
  GridField f;
  f.times = {0.0};
  f.x = uniform_axis(lower, dx, n);
  for (double x : f.x) f.values.push_back(phi0(std::span<const double>(&x, 1)));
  return f;
}

TEST(HopfLax, PlaneWaveIsExact) {
  const HopfLax solver(interval());
  for (double a : {-0.8, 0.0, 0.3, 1.7}) {
    const Potential phi0 = [a](std::span<const double> x) { return a * x[0] + 0.25; };
    for (double t : {0.1, 0.5, 2.0}) {
      for (double x : {-1.0, 0.2, 3.0}) {
        const double expected = a * x + 0.25 - t * oracle::interval_H(a);
        EXPECT_NEAR(solver(phi0, t, std::span<const double>(&x, 1)), expected, 1e-9)
            << a << ' ' << t << ' ' << x;
      }
    }
  }
}

TEST(HopfLax, ConcaveDataGivesMinimumOfPlaneWaves) {
  const HopfLax solver(interval());
  const Potential phi0 = [](std::span<const double> x) { return -std::abs(x[0]); };
  const double t = 0.5;
  for (double x : {-1.5, -0.3, 0.0, 0.4, 2.0}) {
    const double expected = std::min(-x - t * oracle::interval_H(-1.0), x - t * oracle::interval_H(1.0));
    EXPECT_NEAR(solver(phi0, t, std::span<const double>(&x, 1)), expected, 1e-9) << x;
  }
}

TEST(HopfLax, TentDataKeepsZeroAtOrigin) {
  const double x = 0.0;
  EXPECT_NEAR(hopf_lax(interval(), tent, 0.5, std::span<const double>(&x, 1)), 0.0, 1e-12);
}

TEST(HopfLax, RateMatchesLegendre) {
  const HopfLax solver(interval());
  for (double u : {-0.95, -0.4, 0.0, 0.5, 0.9}) {
    EXPECT_NEAR(solver.rate(std::span<const double>(&u, 1)), legendre(interval(), Vec{u}).L, 1e-9) << u;
  }
  const double outside = 1.5;
  EXPECT_TRUE(std::isinf(solver.rate(std::span<const double>(&outside, 1))));
}

TEST(HopfLax, TwoDimensionalRadialPlaneWave) {
  const auto ball = VelocityMeasure::uniform_ball(2, 1.0);
  const HopfLax solver(ball);
  const Vec a{0.6, -0.8};
  const Potential phi0 = [&](std::span<const double> x) { return dot(a, x); };
  const double h = solve_H(ball, a).H;
  for (const Vec& x : {Vec{0.0, 0.0}, Vec{0.5, -1.0}}) {
    EXPECT_NEAR(solver(phi0, 0.5, x), dot(a, x) - 0.5 * h, 1e-6) << format_vec(x);
  }
}

TEST(HopfLax, TwoDimensionalNonRadialUnsupported) {
  const auto atoms = VelocityMeasure::atomic(
      {{{1.0, 0.0}, 1.0 / 3}, {{-0.5, 0.8}, 1.0 / 3}, {{-0.5, -0.8}, 1.0 / 3}});
  try {
    HopfLax solver(atoms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
}

TEST(LaxFriedrichs, ConstantDataStaysConstant) {
  const GridField init = sample_1d([](std::span<const double>) { return 0.7; }, -1.0, 0.01, 200);
  LaxFriedrichsOptions o;
  o.boundary = BoundaryCondition::Periodic;
  const GridField out = lax_friedrichs_solve(interval(), init, 0.3, o);
  for (double v : out.slice(out.nt() - 1)) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(LaxFriedrichs, LinearDataTranslatesExactly) {
  const double a = 0.4;
  const GridField init =
      sample_1d([a](std::span<const double> x) { return a * x[0]; }, -1.0, 0.01, 201);
  const GridField out = lax_friedrichs_solve(interval(), init, 0.5);
  ASSERT_DOUBLE_EQ(out.times.back(), 0.5);
  for (std::size_t i = 0; i < out.nx(); ++i) {
    EXPECT_NEAR(out.at(out.nt() - 1, i), a * out.x[i] - 0.5 * oracle::interval_H(a), 1e-10);
  }
}

TEST(LaxFriedrichs, CflViolations) {
  const GridField init = sample_1d(tent, -2.0, 0.01, 400);
  LaxFriedrichsOptions o;
  o.dt = 0.02;
  EXPECT_THROW(lax_friedrichs_solve(interval(), init, 0.5, o), Error);
  o.dt = 0.0;
  o.cfl = 1.5;
  try {
    lax_friedrichs_solve(interval(), init, 0.5, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CflViolation);
  }
}

TEST(LaxFriedrichs, TwoDimensionalConvergesToHopfLax) {
  const auto ball = VelocityMeasure::uniform_ball(2, 1.0);
  const Potential cone = [](std::span<const double> x) { return std::min(norm(x), 1.0); };
  HopfLaxOptions ho;
  ho.refine_points = 41;
  const HopfLax solver(ball, ho);
  std::vector<double> errors;
  for (std::size_t cells : {40u, 80u}) {
    GridField init;
    init.times = {0.0};
    init.x = uniform_axis(-2.0, 4.0 / cells, cells);
    init.y = init.x;
    for (double x : init.x)
      for (double y : init.y) init.values.push_back(cone(std::array<double, 2>{x, y}));
    LaxFriedrichsOptions o;
    o.boundary = BoundaryCondition::Periodic;
    const GridField lf = lax_friedrichs_solve(ball, init, 0.25, o);
    const GridField hl = solver.solve(periodic(cone, -2.0, 4.0), lf.times, init.x, init.y);
    errors.push_back(sup_distance(lf.values, hl.values));
  }
  EXPECT_LT(errors[1], errors[0]);
  EXPECT_LT(errors[1], 0.15);
}

// Properties.

TEST(LaxFriedrichsProperty, UpdateIsMonotone) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::uniform_real_distribution<double> bump(0.0, 0.5);
  const double dx = 0.01;
  const double R = 1.0;
  const double dt = 0.5 * dx / R;
  const auto H = [](double p) { return oracle::interval_H(p); };
  for (int trial = 0; trial < 2000; ++trial) {
    const double l = value(rng) * dx;
    const double c = value(rng) * dx;
    const double r = value(rng) * dx;
    const double base = detail::lax_friedrichs_update_1d(l, c, r, dx, dt, R, H);
    const double d = bump(rng) * dx;
    EXPECT_GE(detail::lax_friedrichs_update_1d(l + d, c, r, dx, dt, R, H), base - 1e-15);
    EXPECT_GE(detail::lax_friedrichs_update_1d(l, c + d, r, dx, dt, R, H), base - 1e-15);
    EXPECT_GE(detail::lax_friedrichs_update_1d(l, c, r + d, dx, dt, R, H), base - 1e-15);
  }
}

TEST(HjProperty, Comparison) {
  const Potential low = tent;
  const Potential high = [](std::span<const double> x) {
    return std::min(std::abs(x[0]), 1.0) + 0.2 * std::max(0.0, 1.0 - std::abs(x[0] - 0.5));
  };
  const GridField a = sample_1d(low, -2.0, 0.01, 400);
  const GridField b = sample_1d(high, -2.0, 0.01, 400);
  LaxFriedrichsOptions o;
  o.boundary = BoundaryCondition::Periodic;
  o.output_times = {0.1, 0.3, 0.5};
  const GridField la = lax_friedrichs_solve(interval(), a, 0.5, o);
  const GridField lb = lax_friedrichs_solve(interval(), b, 0.5, o);
  for (std::size_t k = 0; k < la.values.size(); ++k) EXPECT_LE(la.values[k], lb.values[k] + 1e-12);

  const HopfLax solver(interval());
  const GridField ha = solver.solve(periodic(low, -2.0, 4.0), la.times, a.x);
  const GridField hb = solver.solve(periodic(high, -2.0, 4.0), la.times, a.x);
  for (std::size_t k = 0; k < ha.values.size(); ++k) EXPECT_LE(ha.values[k], hb.values[k] + 1e-12);
}

TEST(HjProperty, FiniteSpeedOfPropagation) {
  const HopfLax solver(interval());
  const double t = 0.4;
  const double x0 = 0.3;
  const double reach = t * solver.speed();
  const Potential perturbed = [&](std::span<const double> x) {
    const double d = std::abs(x[0] - x0);
    return tent(x) + (d > reach + 1e-9 ? 5.0 * (d - reach) : 0.0);
  };
  const double x = x0;
  EXPECT_NEAR(solver(tent, t, std::span<const double>(&x, 1)),
              solver(perturbed, t, std::span<const double>(&x, 1)), 1e-12);

  // The scheme's numerical cone grows by dx per step, i.e. to t R / cfl.
  const double dx = 0.01;
  LaxFriedrichsOptions o;
  o.output_times = {t};
  const double numerical = t * solver.speed() / o.cfl + 2.0 * dx;
  const Potential far = [&](std::span<const double> x) {
    const double d = std::abs(x[0] - x0);
    return tent(x) + (d > numerical ? 5.0 * (d - numerical) : 0.0);
  };
  const GridField la = lax_friedrichs_solve(interval(), sample_1d(tent, -2.0, dx, 400), t, o);
  const GridField lb = lax_friedrichs_solve(interval(), sample_1d(far, -2.0, dx, 400), t, o);
  for (std::size_t i = 0; i < la.nx(); ++i) {
    if (std::abs(la.x[i] - x0) < 0.05) EXPECT_EQ(la.at(1, i), lb.at(1, i)) << la.x[i];
  }
}

TEST(HjProperty, CrossValidationOrder) {
  const HopfLax solver(interval());
  std::vector<double> errors;
  for (std::size_t cells : {250u, 500u, 1000u}) {
    const double dx = 4.0 / cells;
    const GridField init = sample_1d(tent, -2.0, dx, cells);
    LaxFriedrichsOptions o;
    o.boundary = BoundaryCondition::Periodic;
    const GridField lf = lax_friedrichs_solve(interval(), init, 0.5, o);
    const GridField hl = solver.solve(periodic(tent, -2.0, 4.0), lf.times, init.x);
    errors.push_back(sup_distance(lf.values, hl.values));
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    EXPECT_GE(std::log2(errors[k - 1] / errors[k]), 0.5) << errors[k - 1] << ' ' << errors[k];
  }
}

}  // namespace
}  // namespace jumpkit

#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/pdmp.hpp"

namespace jumpkit {
namespace {

TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(PathStream, UniformAndExponentialMoments) {
  PathStream rng(7, 3);
  double sum_u = 0.0;
  double sum_e = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum_u += u;
    sum_e += rng.exponential();
  }
  EXPECT_NEAR(sum_u / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sum_e / n, 1.0, 5 / std::sqrt(n));
  EXPECT_EQ(rng.blocks_used(), static_cast<std::uint64_t>(n));
}

TEST(PathStream, StreamsAreIndependentOfOrder) {
  PathStream a(1, 5);
  PathStream b(1, 5);
  PathStream c(1, 6);
  const double first = a.uniform();
  EXPECT_EQ(first, b.uniform());
  EXPECT_NE(first, c.uniform());
}

double sampled_mean_square(const VelocityMeasure& m, int n) {
  const VelocitySampler sampler(m);
  PathStream rng(99, 0);
  Vec v(m.dimension());
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    sampler.draw(rng, v);
    s += dot(v, v);
  }
  return s / n;
}

TEST(VelocitySampler, SecondMomentsMatchOracles) {
  const int n = 200000;
  // E|v|^2 = d / (d + 2) for the unit d-ball.
  EXPECT_NEAR(sampled_mean_square(VelocityMeasure::uniform_ball(3, 1.0), n), 0.6, 0.005);
  EXPECT_NEAR(sampled_mean_square(VelocityMeasure::uniform_ball(2, 2.0), n), 2.0, 0.02);
  // Interval [-0.5, 2]: (b^3 - a^3) / (3 (b - a)).
  EXPECT_NEAR(sampled_mean_square(VelocityMeasure::uniform_interval(-0.5, 2.0), n), 8.125 / 7.5, 0.01);

  // Tabulated in 2-D: radial density r g(r), g through (0,1), (0.5,2), (1,0).
  auto g = [](double r) { return r < 0.5 ? 1.0 + 2.0 * r : 4.0 * (1.0 - r); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto moment = [&](int power) {
    return GK::integrate([&](double r) { return std::pow(r, power + 1) * g(r); }, 0.0, 0.5) +
           GK::integrate([&](double r) { return std::pow(r, power + 1) * g(r); }, 0.5, 1.0);
  };
  const double expected = moment(2) / moment(0);
  EXPECT_NEAR(sampled_mean_square(VelocityMeasure::tabulated_radial(2, {0.0, 0.5, 1.0}, {1.0, 2.0, 0.0}), n),
              expected, 0.005);
}

TEST(VelocitySampler, AtomFrequencies) {
  const auto m = VelocityMeasure::atomic({{{-1.0}, 0.2}, {{0.5}, 0.5}, {{2.0}, 0.3}});
  const VelocitySampler sampler(m);
  PathStream rng(5, 0);
  std::array<int, 3> hits{};
  Vec v(1);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    sampler.draw(rng, v);
    hits[v[0] < 0 ? 0 : (v[0] < 1 ? 1 : 2)]++;
  }
  EXPECT_NEAR(hits[0] / double(n), 0.2, 0.006);
  EXPECT_NEAR(hits[1] / double(n), 0.5, 0.008);
  EXPECT_NEAR(hits[2] / double(n), 0.3, 0.007);
}

TEST(Sampling, RecordedPathsAreConsistent) {
  const auto m = VelocityMeasure::uniform_ball(2, 1.0);
  SampleOptions o;
  o.record_paths = 5;
  const auto batch = sample_paths(m, 50, 3.0, 17, o);
  ASSERT_EQ(batch.paths.size(), 5u);
  for (std::size_t p = 0; p < batch.paths.size(); ++p) {
    const auto& rec = batch.paths[p];
    ASSERT_EQ(rec.velocities.size(), rec.jump_times.size() + 1);
    EXPECT_EQ(rec.jump_times.size(), batch.jump_counts[p]);
    Vec x(2, 0.0);
    double t0 = 0.0;
    for (std::size_t s = 0; s < rec.velocities.size(); ++s) {
      const double t1 = s < rec.jump_times.size() ? rec.jump_times[s] : 3.0;
      for (int i = 0; i < 2; ++i) x[i] += rec.velocities[s][i] * (t1 - t0);
      t0 = t1;
    }
    EXPECT_NEAR(x[0], batch.position(p)[0], 1e-12);
    EXPECT_NEAR(x[1], batch.position(p)[1], 1e-12);
  }
}

TEST(Sampling, SingleAtomMovesDeterministically) {
  const auto m = VelocityMeasure::atomic({{{1.0}, 1.0}}, true);
  const auto batch = sample_paths(m, 1000, 100.0, 3);
  for (double x : batch.final_positions) EXPECT_DOUBLE_EQ(x, 100.0);
  const auto report = empirical_moment_check(batch, m);
  EXPECT_TRUE(report.pass);
  EXPECT_DOUBLE_EQ(report.drift[0], 1.0);
}

TEST(Sampling, HistogramCountsInRange) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  const auto batch = sample_paths(m, 10000, 2.0, 8);
  const auto counts = drift_histogram(batch, -1.0, 1.0, 10);
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 10000u);
}

// Properties.

TEST(SamplingProperty, SeedDeterminism) {
  const auto m = VelocityMeasure::uniform_ball(3, 1.0);
  SampleOptions one;
  one.threads = 1;
  one.record_paths = 3;
  SampleOptions many = one;
  many.threads = 4;
  const auto a = sample_paths(m, 2000, 5.0, 123, one);
  const auto b = sample_paths(m, 2000, 5.0, 123, many);
  const auto c = sample_paths(m, 2000, 5.0, 124, one);
  EXPECT_EQ(a.final_positions, b.final_positions);
  EXPECT_EQ(a.jump_counts, b.jump_counts);
  EXPECT_EQ(a.gap_sum, b.gap_sum);
  EXPECT_EQ(a.paths[2].jump_times, b.paths[2].jump_times);
  EXPECT_NE(a.final_positions, c.final_positions);
}

TEST(SamplingProperty, JumpCountsArePoisson) {
  const double T = 4.0;
  const std::size_t count = 100000;
  const auto batch = sample_paths(VelocityMeasure::uniform_interval(-1.0, 1.0), count, T, 2024);
  const boost::math::poisson_distribution<double> poisson(T);
  // Bins 0..k-1 plus a tail bin, each with expected count >= 5.
  std::size_t k = 0;
  while (count * boost::math::pdf(poisson, static_cast<double>(k)) >= 5.0 || k < T) ++k;
  std::vector<double> observed(k + 1, 0.0);
  for (auto j : batch.jump_counts) observed[std::min<std::size_t>(j, k)] += 1.0;
  double chi2 = 0.0;
  for (std::size_t b = 0; b <= k; ++b) {
    const double p = b < k ? boost::math::pdf(poisson, static_cast<double>(b))
                           : boost::math::cdf(boost::math::complement(poisson, static_cast<double>(k - 1)));
    const double expected = count * p;
    chi2 += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(k));
  const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
  EXPECT_GT(p_value, 0.001) << "chi2 = " << chi2 << " bins = " << k + 1;
}

TEST(SamplingProperty, DriftCheckForShippedMeasures) {
  const std::vector<VelocityMeasure> measures{
      VelocityMeasure::uniform_ball(2, 1.0), VelocityMeasure::uniform_ball(3, 1.0),
      VelocityMeasure::uniform_interval(-1.0, 1.0), VelocityMeasure::uniform_interval(-0.5, 2.0),
      VelocityMeasure::atomic({{{-1.0}, 0.25}, {{1.0}, 0.75}}),
      VelocityMeasure::atomic({{{1.0, 0.0}, 1.0 / 3}, {{-0.5, 0.8}, 1.0 / 3}, {{-0.5, -0.8}, 1.0 / 3}}),
      VelocityMeasure::tabulated_radial(2, {0.0, 0.5, 1.0}, {1.0, 2.0, 0.0})};
  std::uint64_t seed = 1;
  for (const auto& m : measures) {
    const auto batch = sample_paths(m, 100000, 10.0, seed++);
    const auto report = empirical_moment_check(batch, m);
    EXPECT_TRUE(report.pass) << m.fingerprint() << " z = " << format_vec(report.z_score);
  }
}

}  // namespace
}  // namespace jumpkit

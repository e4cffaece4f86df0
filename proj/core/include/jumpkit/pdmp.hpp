#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jumpkit/measure.hpp"
#include "jumpkit/vec.hpp"

namespace jumpkit {

// Philox4x32-10 counter-based generator.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter counter, Key key) noexcept;
};

// Random stream for one path: key = seed, counter = (block index, path index),
// each 64 bits split into two 32-bit words (low word first). Every block
// yields two doubles.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path) noexcept;

  double uniform() noexcept;      // in [0, 1), 53 random bits
  double exponential() noexcept;  // rate 1
  double normal() noexcept;       // Box-Muller

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint64_t block_ = 0;
  std::array<double, 2> buffer_{};
  int available_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Exact draws from M: inverse CDF for the 1-D kinds, rejection from the
// bounding box for the ball, Walker's alias table for atoms, and for a
// tabulated radial density an inverse CDF of the radius with a Gaussian
// direction.
class VelocitySampler {
 public:
  explicit VelocitySampler(const VelocityMeasure& m);

  int dimension() const noexcept { return dimension_; }
  void draw(PathStream& rng, std::span<double> v) const;

 private:
  MeasureKind kind_;
  int dimension_ = 1;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double radius_ = 0.0;
  std::vector<Vec> atoms_;
  std::vector<double> alias_prob_;
  std::vector<std::size_t> alias_index_;
  std::vector<double> radial_grid_;  // radius nodes of the tabulated CDF
  std::vector<double> radial_cdf_;
};

struct PathRecord {
  std::vector<double> jump_times;
  std::vector<Vec> velocities;  // velocities[k] holds on [jump_times[k-1], jump_times[k])
  Vec final_position;
};

struct TrajectoryBatch {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  double horizon = 0.0;
  int dimension = 1;
  std::vector<double> final_positions;  // count x dimension, row-major
  std::vector<std::uint32_t> jump_counts;
  // Every exponential duration drawn, including the one cut off at T.
  double gap_sum = 0.0;
  std::uint64_t gap_count = 0;
  double min_gap = 0.0;
  // Largest |v| over all sampled velocities.
  double max_speed = 0.0;
  std::vector<PathRecord> paths;  // the first recorded paths, in path order

  double mean_gap() const noexcept { return gap_sum / static_cast<double>(gap_count); }
  std::span<const double> position(std::size_t path) const {
    return {final_positions.data() + path * dimension, static_cast<std::size_t>(dimension)};
  }
};

inline constexpr std::size_t kMaxRecordedPaths = 10000;

struct SampleOptions {
  std::size_t record_paths = 0;  // capped at kMaxRecordedPaths
  int threads = 0;
};

// The process starts at x = 0 with a velocity drawn from M, then redraws its
// velocity at the events of a rate-1 Poisson clock. Bit-identical for equal
// (measure, count, T, seed) regardless of thread count.
TrajectoryBatch sample_paths(const VelocityMeasure& m, std::size_t count, double T,
                             std::uint64_t seed, const SampleOptions& options = {});

struct MomentReport {
  Vec drift;           // mean of X_T / T
  Vec standard_error;  // per component
  Vec expected;        // grad H(0), the mean velocity
  Vec z_score;         // (drift - expected) / standard_error, 0 when both vanish
  // Cov(X_T) / T, row-major dimension x dimension; reported, not asserted.
  std::vector<double> covariance_rate;
  double sigmas = 3.0;
  bool pass = false;
};

MomentReport empirical_moment_check(const TrajectoryBatch& batch, const VelocityMeasure& m,
                                    double sigmas = 3.0);

// Histogram of the 1-D empirical velocity X_T / T over [lo, hi]; counts per
// equal-width bin.
std::vector<std::size_t> drift_histogram(const TrajectoryBatch& batch, double lo, double hi,
                                         std::size_t bins);

}  // namespace jumpkit

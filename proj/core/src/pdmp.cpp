#include "jumpkit/pdmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <variant>

#include "jumpkit/errors.hpp"
#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/parallel.hpp"

namespace jumpkit {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PathStream::PathStream(std::uint64_t seed, std::uint64_t path) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      path_(path) {}

double PathStream::uniform() noexcept {
  if (available_ == 0) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(path_),
                                  static_cast<std::uint32_t>(path_ >> 32)};
    const auto r = Philox4x32::block(ctr, key_);
    ++block_;
    buffer_ = {to_unit(r[1], r[0]), to_unit(r[3], r[2])};
    available_ = 2;
  }
  return buffer_[2 - available_--];
}

double PathStream::exponential() noexcept {
  // 1 - u lies in (0, 1], so the draw is finite and nonnegative.
  return -std::log1p(-uniform());
}

double PathStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_normal_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

VelocitySampler::VelocitySampler(const VelocityMeasure& m)
    : kind_(m.kind()), dimension_(m.dimension()), radius_(m.support_radius()) {
  const MeasureSpec& spec = m.spec();
  if (const auto* s = std::get_if<UniformIntervalSpec>(&spec)) {
    lower_ = s->lower;
    upper_ = s->upper;
  } else if (const auto* a = std::get_if<AtomicSpec>(&spec)) {
    // Vose's construction of Walker's alias table.
    const std::size_t n = a->atoms.size();
    double total = 0.0;
    for (const Atom& atom : a->atoms) {
      atoms_.push_back(atom.velocity);
      total += atom.weight;
    }
    alias_prob_.resize(n);
    alias_index_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t k = 0; k < n; ++k) {
      scaled[k] = a->atoms[k].weight / total * static_cast<double>(n);
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s_k = small.back();
      small.pop_back();
      const std::size_t l_k = large.back();
      alias_prob_[s_k] = scaled[s_k];
      alias_index_[s_k] = l_k;
      scaled[l_k] -= 1.0 - scaled[s_k];
      if (scaled[l_k] < 1.0) {
        large.pop_back();
        small.push_back(l_k);
      }
    }
    for (std::size_t k : large) alias_prob_[k] = 1.0, alias_index_[k] = k;
    for (std::size_t k : small) alias_prob_[k] = 1.0, alias_index_[k] = k;
  } else if (const auto* t = std::get_if<TabulatedRadialSpec>(&spec)) {
    // CDF of |v|, density proportional to g(s) s^(n-1), by the trapezoid rule
    // on a fine grid refined inside every table segment.
    constexpr int kSub = 256;
    const auto g = [&](double s) {
      const auto it = std::upper_bound(t->radii.begin(), t->radii.end(), s);
      if (it == t->radii.begin()) return t->density.front();
      if (it == t->radii.end()) return t->density.back();
      const auto k = static_cast<std::size_t>(it - t->radii.begin());
      const double w = (s - t->radii[k - 1]) / (t->radii[k] - t->radii[k - 1]);
      return t->density[k - 1] + w * (t->density[k] - t->density[k - 1]);
    };
    const auto f = [&](double s) { return g(s) * std::pow(s, dimension_ - 1); };
    double prev_s = 0.0;
    radial_grid_.push_back(0.0);
    radial_cdf_.push_back(0.0);
    std::vector<double> knots{0.0};
    for (double r : t->radii)
      if (r > 0.0) knots.push_back(r);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      for (int j = 1; j <= kSub; ++j) {
        const double s = knots[k] + (knots[k + 1] - knots[k]) * j / kSub;
        radial_cdf_.push_back(radial_cdf_.back() + 0.5 * (s - prev_s) * (f(prev_s) + f(s)));
        radial_grid_.push_back(s);
        prev_s = s;
      }
    }
    const double total = radial_cdf_.back();
    for (double& c : radial_cdf_) c /= total;
  }
}

void VelocitySampler::draw(PathStream& rng, std::span<double> v) const {
  switch (kind_) {
    case MeasureKind::UniformInterval:
      v[0] = lower_ + (upper_ - lower_) * rng.uniform();
      return;
    case MeasureKind::UniformBall: {
      if (dimension_ == 1) {
        v[0] = radius_ * (2.0 * rng.uniform() - 1.0);
        return;
      }
      while (true) {
        double r2 = 0.0;
        for (double& x : v) {
          x = radius_ * (2.0 * rng.uniform() - 1.0);
          r2 += x * x;
        }
        if (r2 <= radius_ * radius_) return;
      }
    }
    case MeasureKind::Atomic: {
      const double u = rng.uniform() * static_cast<double>(atoms_.size());
      auto k = std::min(static_cast<std::size_t>(u), atoms_.size() - 1);
      if (u - static_cast<double>(k) >= alias_prob_[k]) k = alias_index_[k];
      std::copy(atoms_[k].begin(), atoms_[k].end(), v.begin());
      return;
    }
    case MeasureKind::TabulatedRadial: {
      const double u = rng.uniform();
      const auto it = std::upper_bound(radial_cdf_.begin(), radial_cdf_.end(), u);
      const auto k = std::clamp<std::size_t>(
          static_cast<std::size_t>(it - radial_cdf_.begin()), 1, radial_cdf_.size() - 1);
      const double c0 = radial_cdf_[k - 1];
      const double c1 = radial_cdf_[k];
      const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
      const double r = radial_grid_[k - 1] + w * (radial_grid_[k] - radial_grid_[k - 1]);
      if (dimension_ == 1) {
        v[0] = rng.uniform() < 0.5 ? -r : r;
        return;
      }
      double len = 0.0;
      while (len == 0.0) {
        len = 0.0;
        for (double& x : v) {
          x = rng.normal();
          len += x * x;
        }
        len = std::sqrt(len);
      }
      for (double& x : v) x *= r / len;
      return;
    }
  }
}

TrajectoryBatch sample_paths(const VelocityMeasure& m, std::size_t count, double T,
                             std::uint64_t seed, const SampleOptions& options) {
  if (count == 0) fail(ErrorCode::InvalidArgument, "sample_paths: count must be at least 1");
  if (!(T > 0.0) || !std::isfinite(T))
    fail(ErrorCode::InvalidArgument, "sample_paths: horizon must be positive");
  const VelocitySampler sampler(m);
  const auto n = static_cast<std::size_t>(m.dimension());
  const std::size_t recorded = std::min({options.record_paths, kMaxRecordedPaths, count});

  TrajectoryBatch batch;
  batch.seed = seed;
  batch.count = count;
  batch.horizon = T;
  batch.dimension = m.dimension();
  batch.final_positions.assign(count * n, 0.0);
  batch.jump_counts.assign(count, 0);
  batch.paths.resize(recorded);
  std::vector<double> gap_sums(count, 0.0);
  std::vector<std::uint32_t> gap_counts(count, 0);
  std::vector<double> min_gaps(count, 0.0);
  std::vector<double> max_speeds(count, 0.0);

  parallel_for(count, options.threads, [&](std::size_t path) {
    PathStream rng(seed, path);
    PathRecord* record = path < recorded ? &batch.paths[path] : nullptr;
    Vec v(n);
    double* x = &batch.final_positions[path * n];
    double t = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    double max_speed = 0.0;
    std::uint32_t jumps = 0;
    while (true) {
      sampler.draw(rng, v);
      max_speed = std::max(max_speed, norm(v));
      if (record) record->velocities.push_back(v);
      const double gap = rng.exponential();
      gap_sums[path] += gap;
      ++gap_counts[path];
      min_gap = std::min(min_gap, gap);
      const double duration = std::min(gap, T - t);
      for (std::size_t k = 0; k < n; ++k) x[k] += v[k] * duration;
      if (t + gap >= T) break;
      t += gap;
      ++jumps;
      if (record) record->jump_times.push_back(t);
    }
    batch.jump_counts[path] = jumps;
    min_gaps[path] = min_gap;
    max_speeds[path] = max_speed;
    if (record) record->final_position.assign(x, x + n);
  });

  batch.min_gap = *std::min_element(min_gaps.begin(), min_gaps.end());
  batch.max_speed = *std::max_element(max_speeds.begin(), max_speeds.end());
  for (std::size_t path = 0; path < count; ++path) {
    batch.gap_sum += gap_sums[path];
    batch.gap_count += gap_counts[path];
  }
  return batch;
}

MomentReport empirical_moment_check(const TrajectoryBatch& batch, const VelocityMeasure& m,
                                    double sigmas) {
  if (batch.count == 0) fail(ErrorCode::InvalidArgument, "empirical_moment_check: empty batch");
  if (batch.dimension != m.dimension())
    fail(ErrorCode::InvalidArgument, "empirical_moment_check: dimension mismatch");
  const auto n = static_cast<std::size_t>(batch.dimension);
  const double count = static_cast<double>(batch.count);
  const double T = batch.horizon;

  MomentReport report;
  report.sigmas = sigmas;
  report.expected = grad_H(m, Vec(n, 0.0));
  report.drift.assign(n, 0.0);
  for (std::size_t path = 0; path < batch.count; ++path)
    for (std::size_t k = 0; k < n; ++k) report.drift[k] += batch.position(path)[k] / T;
  for (double& d : report.drift) d /= count;

  report.covariance_rate.assign(n * n, 0.0);
  for (std::size_t path = 0; path < batch.count; ++path) {
    const auto x = batch.position(path);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        report.covariance_rate[a * n + b] +=
            (x[a] - T * report.drift[a]) * (x[b] - T * report.drift[b]);
  }
  const double denom = batch.count > 1 ? count - 1.0 : 1.0;
  for (double& c : report.covariance_rate) c /= denom * T;

  report.pass = true;
  report.standard_error.resize(n);
  report.z_score.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Var(X_T / T) = Cov(X_T) / T^2, so SE = sqrt(rate / (T count)).
    report.standard_error[k] = std::sqrt(report.covariance_rate[k * n + k] / (T * count));
    const double diff = report.drift[k] - report.expected[k];
    const double se = report.standard_error[k];
    const double floor = 1e-12 * (1.0 + std::abs(report.expected[k]));
    if (se > floor) {
      report.z_score[k] = diff / se;
      report.pass = report.pass && std::abs(diff) <= sigmas * se;
    } else {
      report.z_score[k] = 0.0;
      report.pass = report.pass && std::abs(diff) <= floor;
    }
  }
  return report;
}

std::vector<std::size_t> drift_histogram(const TrajectoryBatch& batch, double lo, double hi,
                                         std::size_t bins) {
  if (batch.dimension != 1)
    fail(ErrorCode::Unsupported, "drift_histogram: only 1-D batches");
  if (!(hi > lo) || bins == 0) fail(ErrorCode::InvalidArgument, "drift_histogram: bad range");
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t path = 0; path < batch.count; ++path) {
    const double u = batch.position(path)[0] / batch.horizon;
    if (u < lo || u > hi) continue;
    const auto k = std::min(static_cast<std::size_t>((u - lo) / width), bins - 1);
    ++counts[k];
  }
  return counts;
}

}  // namespace jumpkit

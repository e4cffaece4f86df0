#include "jumpkit/hj_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "jumpkit/errors.hpp"
#include "jumpkit/parallel.hpp"
#include "jumpkit/roots.hpp"

namespace jumpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double x, double lower, double period) {
  double r = std::fmod(x - lower, period);
  if (r < 0.0) r += period;
  return lower + r;
}

double axis_step(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 3)
    fail(ErrorCode::InvalidArgument, std::string("lax_friedrichs: axis ") + name +
                                         " needs at least 3 points");
  const double step = axis[1] - axis[0];
  if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "lax_friedrichs: axis not increasing");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i] - axis[i - 1] - step) > 1e-9 * step)
      fail(ErrorCode::InvalidArgument, std::string("lax_friedrichs: axis ") + name +
                                           " is not uniform");
  return step;
}

}  // namespace

Potential periodic(Potential phi0, double lower, double period) {
  if (!(period > 0.0)) fail(ErrorCode::InvalidArgument, "periodic: period must be positive");
  return [phi0 = std::move(phi0), lower, period](std::span<const double> x) {
    std::array<double, 2> y{};
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = wrap(x[k], lower, period);
    return phi0(std::span<const double>(y.data(), x.size()));
  };
}

HopfLax::HopfLax(const VelocityMeasure& m, HopfLaxOptions options)
    : options_(options), dimension_(m.dimension()), speed_(m.support_radius()) {
  if (dimension_ > 2) fail(ErrorCode::Unsupported, "hopf_lax: only 1-D and 2-D are supported");
  if (dimension_ == 2 && !m.rotationally_invariant())
    fail(ErrorCode::Unsupported, "hopf_lax: 2-D requires a rotationally invariant measure");
  if (!(options_.lattice_step > 0.0 && options_.lattice_step < 1.0))
    fail(ErrorCode::InvalidArgument, "hopf_lax: lattice_step must lie in (0, 1)");
  if (options_.refine_points < 3)
    fail(ErrorCode::InvalidArgument, "hopf_lax: refine_points must be at least 3");

  if (dimension_ == 1) {
    const std::array<double, 1> up{1.0};
    const std::array<double, 1> down{-1.0};
    lo_ = -support_value(m, down);
    hi_ = support_value(m, up);
  } else {
    lo_ = 0.0;
    hi_ = speed_;
  }
  const auto cells =
      static_cast<std::size_t>(std::ceil((hi_ - lo_) / (options_.lattice_step * speed_)));
  const std::size_t n = std::max<std::size_t>(cells, 2) + 1;
  step_ = (hi_ - lo_) / static_cast<double>(n - 1);
  value_.resize(n);
  slope_.resize(n);
  std::vector<char> exact(n);
  parallel_for(n, options_.threads, [&](std::size_t k) {
    Vec v(dimension_, 0.0);
    v[0] = k + 1 == n ? hi_ : lo_ + static_cast<double>(k) * step_;
    const LegendreEval e = legendre(m, v);
    value_[k] = e.L;
    slope_[k] = e.argmax_p[0];
    exact[k] = !e.boundary;
  });
  exact_slope_.assign(exact.begin(), exact.end());
}

double HopfLax::rate_1d(double u) const {
  const double slack = 1e-12 * (1.0 + std::abs(hi_ - lo_));
  if (u < lo_ - slack || u > hi_ + slack) return kInf;
  u = std::clamp(u, lo_, hi_);
  const std::size_t last = value_.size() - 1;
  const auto k = std::min(static_cast<std::size_t>((u - lo_) / step_), last - 1);
  const double s = (u - lo_) / step_ - static_cast<double>(k);
  if (!exact_slope_[k] || !exact_slope_[k + 1])
    return value_[k] + s * (value_[k + 1] - value_[k]);
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * value_[k] + (s3 - 2 * s2 + s) * step_ * slope_[k] +
         (-2 * s3 + 3 * s2) * value_[k + 1] + (s3 - s2) * step_ * slope_[k + 1];
}

double HopfLax::rate(std::span<const double> u) const {
  if (u.size() != static_cast<std::size_t>(dimension_))
    fail(ErrorCode::InvalidArgument, "hopf_lax: dimension mismatch");
  return dimension_ == 1 ? rate_1d(u[0]) : rate_1d(norm(u));
}

double HopfLax::minimize_1d(const Potential& phi0, double t, double x) const {
  const auto objective = [&](double u) {
    const double y = x - t * u;
    return phi0(std::span<const double>(&y, 1)) + t * rate_1d(u);
  };
  const std::size_t n = value_.size();
  std::size_t best_k = 0;
  double best = kInf;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = k + 1 == n ? hi_ : lo_ + static_cast<double>(k) * step_;
    const double y = x - t * u;
    const double f = phi0(std::span<const double>(&y, 1)) + t * value_[k];
    if (f < best) {
      best = f;
      best_k = k;
    }
  }
  const double a = lo_ + static_cast<double>(best_k == 0 ? 0 : best_k - 1) * step_;
  const double b = std::min(hi_, lo_ + static_cast<double>(best_k + 1) * step_);
  const auto polished = golden_section_max([&](double u) { return -objective(u); }, a, b,
                                           options_.polish_tol * speed_);
  return std::min(best, -polished.value);
}

double HopfLax::minimize_2d(const Potential& phi0, double t, std::span<const double> x) const {
  const auto objective = [&](double u0, double u1) {
    const double r = std::hypot(u0, u1);
    if (r > hi_) return kInf;
    const std::array<double, 2> y{x[0] - t * u0, x[1] - t * u1};
    return phi0(y) + t * rate_1d(r);
  };
  const int g = options_.refine_points;
  const double h = 2.0 * speed_ / (g - 1);
  std::array<double, 2> u{0.0, 0.0};
  double best = objective(0.0, 0.0);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double u0 = -speed_ + i * h;
      const double u1 = -speed_ + j * h;
      const double f = objective(u0, u1);
      if (f < best) {
        best = f;
        u = {u0, u1};
      }
    }
  }
  // Compass search over the 8 neighbours, halving the step on failure.
  constexpr std::array<std::array<double, 2>, 8> kDirs{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  double step = h;
  for (int it = 0; it < 10000 && step > options_.polish_tol * speed_; ++it) {
    bool moved = false;
    for (const auto& d : kDirs) {
      const double f = objective(u[0] + step * d[0], u[1] + step * d[1]);
      if (f < best) {
        best = f;
        u = {u[0] + step * d[0], u[1] + step * d[1]};
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

double HopfLax::operator()(const Potential& phi0, double t, std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dimension_))
    fail(ErrorCode::InvalidArgument, "hopf_lax: dimension mismatch");
  if (!(t >= 0.0) || !std::isfinite(t))
    fail(ErrorCode::InvalidArgument, "hopf_lax: time must be finite and nonnegative");
  if (t == 0.0) return phi0(x);
  return dimension_ == 1 ? minimize_1d(phi0, t, x[0]) : minimize_2d(phi0, t, x);
}

GridField HopfLax::solve(const Potential& phi0, const std::vector<double>& times,
                         const std::vector<double>& x, const std::vector<double>& y) const {
  if ((dimension_ == 1) != y.empty())
    fail(ErrorCode::InvalidArgument, "hopf_lax: grid dimension does not match the measure");
  GridField field;
  field.times = times;
  field.x = x;
  field.y = y;
  field.values.assign(field.nt() * field.slice_size(), 0.0);
  field.validate();
  const std::size_t ny = field.ny();
  parallel_for(field.values.size(), options_.threads, [&](std::size_t idx) {
    const std::size_t k = idx / field.slice_size();
    const std::size_t i = (idx / ny) % field.nx();
    const std::size_t j = idx % ny;
    std::array<double, 2> point{x[i], y.empty() ? 0.0 : y[j]};
    field.values[idx] = (*this)(phi0, times[k], std::span<const double>(point.data(), dimension_));
  });
  return field;
}

double hopf_lax(const VelocityMeasure& m, const Potential& phi0, double t,
                std::span<const double> x) {
  return HopfLax(m)(phi0, t, x);
}

namespace detail {

double lax_friedrichs_update_1d(double left, double centre, double right, double dx, double dt,
                                double viscosity, const std::function<double(double)>& Hp) {
  const double forward = (right - centre) / dx;
  const double backward = (centre - left) / dx;
  return centre - dt * (Hp(0.5 * (forward + backward)) - 0.5 * viscosity * (forward - backward));
}

}  // namespace detail

GridField lax_friedrichs_solve(const VelocityMeasure& m, const GridField& initial, double T,
                               const LaxFriedrichsOptions& options) {
  initial.validate();
  const int dims = initial.dims();
  if (dims != m.dimension())
    fail(ErrorCode::InvalidArgument, "lax_friedrichs: grid dimension does not match the measure");
  if (initial.nt() != 1)
    fail(ErrorCode::InvalidArgument, "lax_friedrichs: initial field must hold one time slice");
  if (!(T > 0.0) || !std::isfinite(T))
    fail(ErrorCode::InvalidArgument, "lax_friedrichs: final time must be positive");
  if (!(options.cfl > 0.0 && options.cfl <= 1.0))
    fail(ErrorCode::CflViolation, "lax_friedrichs: cfl must lie in (0, 1]");
  if (!all_finite(initial.values))
    fail(ErrorCode::InvalidArgument, "lax_friedrichs: non-finite initial data");

  const double dx = axis_step(initial.x, "x");
  const double dy = dims == 2 ? axis_step(initial.y, "y") : kInf;
  const double R = m.support_radius();
  const double inv_sum = 1.0 / dx + (dims == 2 ? 1.0 / dy : 0.0);
  const double dt_max = options.cfl / (R * inv_sum);
  if (options.dt < 0.0) fail(ErrorCode::InvalidArgument, "lax_friedrichs: negative time step");
  if (options.dt > dt_max * (1.0 + 1e-12))
    fail(ErrorCode::CflViolation, "lax_friedrichs: dt = " + format_number(options.dt) +
                                      " exceeds the bound " + format_number(dt_max));
  const double dt_cap = options.dt > 0.0 ? options.dt : dt_max;

  std::vector<double> outputs = options.output_times;
  if (outputs.empty()) outputs.push_back(T);
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  if (outputs.front() <= 0.0 || outputs.back() > T * (1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, "lax_friedrichs: output times must lie in (0, T]");

  GridField field;
  field.times.push_back(0.0);
  field.times.insert(field.times.end(), outputs.begin(), outputs.end());
  field.x = initial.x;
  field.y = initial.y;
  field.values = initial.values;
  field.values.reserve(field.nt() * field.slice_size());

  const auto nx = static_cast<std::ptrdiff_t>(field.nx());
  const auto ny = static_cast<std::ptrdiff_t>(field.ny());
  const bool periodic_bc = options.boundary == BoundaryCondition::Periodic;
  std::vector<double> cur(initial.values);
  std::vector<double> next(cur.size());

  // Value at (i, j) with one ghost layer on each side.
  const auto value = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    const auto at = [&](std::ptrdiff_t a, std::ptrdiff_t b) { return cur[a * ny + b]; };
    if (periodic_bc) return at((i + nx) % nx, (j + ny) % ny);
    if (i < 0) return 2.0 * at(0, j) - at(1, j);
    if (i >= nx) return 2.0 * at(nx - 1, j) - at(nx - 2, j);
    if (j < 0) return 2.0 * at(i, 0) - at(i, 1);
    if (j >= ny) return 2.0 * at(i, ny - 1) - at(i, ny - 2);
    return at(i, j);
  };

  const auto step = [&](double dt) {
    parallel_for(cur.size(), options.threads, [&](std::size_t idx) {
      const auto i = static_cast<std::ptrdiff_t>(idx) / ny;
      const auto j = static_cast<std::ptrdiff_t>(idx) % ny;
      const double c = cur[idx];
      const double fx = (value(i + 1, j) - c) / dx;
      const double bx = (c - value(i - 1, j)) / dx;
      std::array<double, 2> p{0.5 * (fx + bx), 0.0};
      double diffusion = 0.5 * R * (fx - bx);
      if (dims == 2) {
        const double fy = (value(i, j + 1) - c) / dy;
        const double by = (c - value(i, j - 1)) / dy;
        p[1] = 0.5 * (fy + by);
        diffusion += 0.5 * R * (fy - by);
      }
      const double H =
          hamiltonian_value(m, std::span<const double>(p.data(), dims), options.tolerances).H;
      next[idx] = c - dt * (H - diffusion);
    });
    cur.swap(next);
  };

  double t = 0.0;
  for (double target : outputs) {
    const double span = target - t;
    const auto steps = static_cast<long>(std::ceil(span / dt_cap * (1.0 - 1e-12)));
    const double dt = span / static_cast<double>(std::max(steps, 1L));
    for (long s = 0; s < steps; ++s) step(dt);
    t = target;
    field.values.insert(field.values.end(), cur.begin(), cur.end());
  }
  return field;
}

}  // namespace jumpkit

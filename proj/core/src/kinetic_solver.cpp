#include "jumpkit/kinetic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jumpkit/errors.hpp"
#include "jumpkit/parallel.hpp"

namespace jumpkit {

namespace {

struct Setup {
  VelocityQuadrature quad;
  std::size_t nx = 0;
  std::size_t nv = 0;
  double dx = 0.0;
  double dt = 0.0;
  long steps_total = 0;
  std::vector<double> outputs;
};

Setup prepare(const VelocityMeasure& m, const GridField& phi0, double eps, double T,
              const KineticOptions& options, const char* who) {
  const std::string name(who);
  if (m.dimension() != 1) fail(ErrorCode::Unsupported, name + ": only 1-D measures");
  phi0.validate();
  if (phi0.dims() != 1 || phi0.nt() != 1)
    fail(ErrorCode::InvalidArgument, name + ": phi0 must be a single 1-D slice");
  if (phi0.nx() < 3) fail(ErrorCode::InvalidArgument, name + ": need at least 3 grid points");
  if (!all_finite(phi0.values)) fail(ErrorCode::InvalidArgument, name + ": non-finite phi0");
  if (!(eps > 0.0) || !std::isfinite(eps))
    fail(ErrorCode::InvalidArgument, name + ": eps must be positive");
  if (!(T > 0.0) || !std::isfinite(T))
    fail(ErrorCode::InvalidArgument, name + ": final time must be positive");
  if (!(options.cfl > 0.0 && options.cfl <= 1.0))
    fail(ErrorCode::CflViolation, name + ": cfl must lie in (0, 1]");

  Setup s;
  s.quad = m.velocity_quadrature();
  s.nx = phi0.nx();
  s.nv = s.quad.nodes.size();
  s.dx = phi0.x[1] - phi0.x[0];
  for (std::size_t i = 1; i < s.nx; ++i)
    if (std::abs(phi0.x[i] - phi0.x[i - 1] - s.dx) > 1e-9 * s.dx)
      fail(ErrorCode::InvalidArgument, name + ": grid is not uniform");
  s.dt = std::min(options.cfl * s.dx / m.support_radius(), 0.25 * eps);

  s.outputs = options.output_times;
  if (s.outputs.empty()) s.outputs.push_back(T);
  std::sort(s.outputs.begin(), s.outputs.end());
  s.outputs.erase(std::unique(s.outputs.begin(), s.outputs.end()), s.outputs.end());
  if (s.outputs.front() <= 0.0 || s.outputs.back() > T * (1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, name + ": output times must lie in (0, T]");
  return s;
}

// Steps from t to target with a uniform step no larger than dt_max.
template <class Step>
long advance(double t, double target, double dt_max, double& dt_used, Step&& step) {
  const double span = target - t;
  const auto steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max * (1.0 - 1e-12))));
  dt_used = span / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) step(dt_used);
  return steps;
}

// First-order upwind transport of one cell's velocity row.
inline double upwind(double v, double courant_per_speed, double left, double centre,
                     double right) {
  const double c = v * courant_per_speed;
  return v > 0.0 ? centre - c * (centre - left) : centre - c * (right - centre);
}

double discrete_lipschitz(std::span<const double> values, double dx) {
  double lip = 0.0;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i)
    lip = std::max(lip, std::abs(values[(i + 1) % n] - values[i]) / dx);
  return lip;
}

void check_bounds(const KineticField& out, std::size_t k, double tol) {
  const GridField& f = out.field;
  const double t = f.times[k];
  const auto slice = f.slice(k);
  const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
  if (*lo < out.lower_bound - tol || *hi > out.upper_bound + tol)
    fail(ErrorCode::BoundViolation,
         "kinetic_solve: phi left [" + format_number(out.lower_bound) + ", " +
             format_number(out.upper_bound) + "] at t = " + format_number(t) + " (range " +
             format_number(*lo) + " .. " + format_number(*hi) + ")");
  const double slope = t * out.lipschitz0 * (1.0 + tol);
  for (std::size_t i = 0; i < f.nx(); ++i) {
    for (std::size_t j = 0; j + 1 < f.ny(); ++j) {
      const double dv = f.y[j + 1] - f.y[j];
      if (std::abs(f.at(k, i, j + 1) - f.at(k, i, j)) > slope * dv + tol)
        fail(ErrorCode::BoundViolation,
             "kinetic_solve: velocity Lipschitz bound exceeded at t = " + format_number(t) +
                 ", x = " + format_number(f.x[i]));
    }
  }
}

}  // namespace

GridField PeriodicGrid::sample(const Potential& phi0) const {
  if (cells < 3 || !(length > 0.0))
    fail(ErrorCode::InvalidArgument, "periodic grid: need length > 0 and at least 3 cells");
  GridField field;
  field.times = {0.0};
  field.x = axis();
  field.values.reserve(cells);
  for (double x : field.x) field.values.push_back(phi0(std::span<const double>(&x, 1)));
  return field;
}

namespace detail {

double exchange_integral(double phi, std::span<const double> phis, std::span<const double> weights,
                         double eps, bool shifted) {
  double sum = 0.0;
  if (!shifted) {
    for (std::size_t k = 0; k < phis.size(); ++k)
      sum += weights[k] * std::exp((phi - phis[k]) / eps);
    return 1.0 - sum;
  }
  const double phi_min = *std::min_element(phis.begin(), phis.end());
  for (std::size_t k = 0; k < phis.size(); ++k)
    sum += weights[k] * std::exp(-(phis[k] - phi_min) / eps);
  return 1.0 - std::exp((phi - phi_min) / eps) * sum;
}

double implicit_exchange(double phi_star, double phi_min, double phi_max, double s, double dt,
                         double eps) {
  // g(x) = x - phi_star - dt + dt s exp((x - phi_min) / eps) is increasing and
  // convex, with g(phi_min) <= 0 and g(min(phi_max, phi_star + dt)) >= 0.
  const double c = phi_star + dt;
  const double k = dt * s;
  const auto g = [&](double x, double& slope) {
    const double e = k * std::exp((x - phi_min) / eps);
    slope = 1.0 + e / eps;
    return x - c + e;
  };
  double lo = phi_min;
  double hi = std::min(phi_max, c);
  // Start from one Newton step off phi_star.
  double slope = 0.0;
  double gx = g(phi_star, slope);
  double x = phi_star - gx / slope;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  const double tol = 2e-16 * (std::abs(c) + dt);
  for (int it = 0; it < 100; ++it) {
    gx = g(x, slope);
    if (std::abs(gx) <= tol) break;
    if (gx > 0.0)
      hi = x;
    else
      lo = x;
    double next = x - gx / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace detail

KineticField kinetic_solve(const VelocityMeasure& m, const GridField& phi0, double eps, double T,
                           const KineticOptions& options) {
  Setup s = prepare(m, phi0, eps, T, options, "kinetic_solve");
  const std::size_t nx = s.nx;
  const std::size_t nv = s.nv;
  const auto& v = s.quad.nodes;
  const auto& w = s.quad.weights;

  KineticField out;
  out.eps = eps;
  out.weights = w;
  out.lipschitz0 = discrete_lipschitz(phi0.values, s.dx);
  const auto [lo, hi] = std::minmax_element(phi0.values.begin(), phi0.values.end());
  out.lower_bound = *lo;
  out.upper_bound = *hi;
  out.field.times.push_back(0.0);
  out.field.times.insert(out.field.times.end(), s.outputs.begin(), s.outputs.end());
  out.field.x = phi0.x;
  out.field.y = v;
  out.field.values.reserve(out.field.nt() * nx * nv);

  std::vector<double> cur(nx * nv);
  for (std::size_t i = 0; i < nx; ++i)
    std::fill_n(cur.begin() + static_cast<std::ptrdiff_t>(i * nv), nv, phi0.values[i]);
  std::vector<double> next(cur.size());
  out.field.values.insert(out.field.values.end(), cur.begin(), cur.end());

  const auto step = [&](double dt) {
    const double lambda = dt / s.dx;
    parallel_for(nx, options.threads, [&](std::size_t i) {
      const double* left = &cur[((i + nx - 1) % nx) * nv];
      const double* centre = &cur[i * nv];
      const double* right = &cur[((i + 1) % nx) * nv];
      double* row = &next[i * nv];
      for (std::size_t k = 0; k < nv; ++k)
        row[k] = upwind(v[k], lambda, left[k], centre[k], right[k]);
      const auto [mn, mx] = std::minmax_element(row, row + nv);
      const double phi_min = *mn;
      const double phi_max = *mx;
      if (phi_max == phi_min) return;  // the exchange vanishes on a v-constant row
      double sum = 0.0;
      for (std::size_t k = 0; k < nv; ++k) sum += w[k] * std::exp(-(row[k] - phi_min) / eps);
      for (std::size_t k = 0; k < nv; ++k)
        row[k] = detail::implicit_exchange(row[k], phi_min, phi_max, sum, dt, eps);
    });
    cur.swap(next);
  };

  double t = 0.0;
  for (std::size_t o = 0; o < s.outputs.size(); ++o) {
    out.steps += advance(t, s.outputs[o], s.dt, out.dt, step);
    t = s.outputs[o];
    out.field.values.insert(out.field.values.end(), cur.begin(), cur.end());
    if (options.check_bounds) check_bounds(out, o + 1, options.bound_tolerance);
  }
  return out;
}

LinearFResult linear_f_solve(const VelocityMeasure& m, const GridField& phi0, double eps, double T,
                             const KineticOptions& options) {
  Setup s = prepare(m, phi0, eps, T, options, "linear_f_solve");
  double sup = 0.0;
  for (double x : phi0.values) sup = std::max(sup, std::abs(x));
  if (sup / eps > 600.0)
    fail(ErrorCode::UnderflowRisk, "linear_f_solve: max|phi0|/eps = " + format_number(sup / eps) +
                                       " exceeds 600; use kinetic_solve");
  const std::size_t nx = s.nx;
  const std::size_t nv = s.nv;
  const auto& v = s.quad.nodes;
  const auto& w = s.quad.weights;

  LinearFResult out;
  out.eps = eps;
  std::vector<double> times{0.0};
  times.insert(times.end(), s.outputs.begin(), s.outputs.end());
  for (GridField* g : {&out.ratio, &out.potential}) {
    g->times = times;
    g->x = phi0.x;
    g->y = v;
    g->values.reserve(times.size() * nx * nv);
  }

  std::vector<double> cur(nx * nv);
  for (std::size_t i = 0; i < nx; ++i)
    std::fill_n(cur.begin() + static_cast<std::ptrdiff_t>(i * nv), nv,
                std::exp(-phi0.values[i] / eps));
  std::vector<double> next(cur.size());
  std::vector<double> cell_mass(nx);

  const auto total_mass = [&](const std::vector<double>& g) {
    parallel_for(nx, options.threads, [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nv; ++k) acc += w[k] * g[i * nv + k];
      cell_mass[i] = acc;
    });
    double mass = 0.0;
    for (double c : cell_mass) mass += c;
    return mass * s.dx;
  };
  const auto record = [&] {
    out.ratio.values.insert(out.ratio.values.end(), cur.begin(), cur.end());
    for (double g : cur) out.potential.values.push_back(-eps * std::log(g));
    out.mass.push_back(total_mass(cur));
  };
  record();

  double mass = out.mass.front();
  const auto step = [&](double dt) {
    const double lambda = dt / s.dx;
    const double a = dt / eps;
    parallel_for(nx, options.threads, [&](std::size_t i) {
      const double* left = &cur[((i + nx - 1) % nx) * nv];
      const double* centre = &cur[i * nv];
      const double* right = &cur[((i + 1) % nx) * nv];
      double* row = &next[i * nv];
      double rho = 0.0;
      for (std::size_t k = 0; k < nv; ++k) {
        row[k] = upwind(v[k], lambda, left[k], centre[k], right[k]);
        rho += w[k] * row[k];
      }
      // Backward Euler on the relaxation keeps rho unchanged.
      for (std::size_t k = 0; k < nv; ++k) row[k] = (row[k] + a * rho) / (1.0 + a);
    });
    cur.swap(next);
    const double updated = total_mass(cur);
    out.max_mass_step_drift = std::max(out.max_mass_step_drift, std::abs(updated - mass) / mass);
    mass = updated;
  };

  double t = 0.0;
  for (double target : s.outputs) {
    out.steps += advance(t, target, s.dt, out.dt, step);
    t = target;
    record();
  }
  return out;
}

bool ConvergenceReport::errors_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].sup_error < rows[k - 1].sup_error)) return false;
  return true;
}

bool ConvergenceReport::spread_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].v_spread < rows[k - 1].v_spread)) return false;
  return true;
}

ConvergenceReport convergence_report(const VelocityMeasure& m, const Potential& phi0,
                                     const std::vector<double>& eps_list, double T,
                                     const PeriodicGrid& grid, const KineticOptions& options) {
  if (eps_list.empty()) fail(ErrorCode::InvalidArgument, "convergence_report: empty eps list");
  for (std::size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1]))
      fail(ErrorCode::InvalidArgument, "convergence_report: eps list must be strictly decreasing");

  const Potential periodic_phi0 = periodic(phi0, grid.lower, grid.length);
  const GridField initial = grid.sample(periodic_phi0);
  HopfLaxOptions hl_options;
  hl_options.threads = options.threads;
  const HopfLax reference(m, hl_options);

  ConvergenceReport report;
  GridField limit;
  for (double eps : eps_list) {
    const KineticField k = kinetic_solve(m, initial, eps, T, options);
    if (limit.values.empty()) limit = reference.solve(periodic_phi0, k.field.times, k.field.x);
    ConvergenceRow row;
    row.eps = eps;
    row.steps = k.steps;
    row.dt = k.dt;
    const std::size_t nv = k.field.ny();
    for (std::size_t t = 0; t < k.field.nt(); ++t) {
      for (std::size_t i = 0; i < k.field.nx(); ++i) {
        const double phi = limit.at(t, i);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t j = 0; j < nv; ++j) {
          const double value = k.field.at(t, i, j);
          row.sup_error = std::max(row.sup_error, std::abs(value - phi));
          lo = std::min(lo, value);
          hi = std::max(hi, value);
        }
        row.v_spread = std::max(row.v_spread, hi - lo);
      }
    }
    report.rows.push_back(row);
  }

  std::ostringstream manifest;
  manifest << "measure: " << m.fingerprint() << '\n'
           << "grid: lower=" << format_number(grid.lower)
           << " length=" << format_number(grid.length) << " cells=" << grid.cells
           << " dx=" << format_number(grid.dx()) << '\n'
           << "T: " << format_number(T) << '\n'
           << "cfl: " << format_number(options.cfl) << '\n'
           << "bound_tolerance: " << format_number(options.bound_tolerance) << '\n'
           << "velocity_nodes: " << m.velocity_quadrature().nodes.size() << '\n'
           << "output_times:";
  for (double t : limit.times) manifest << ' ' << format_number(t);
  manifest << "\neps:";
  for (double e : eps_list) manifest << ' ' << format_number(e);
  manifest << '\n';
  for (const auto& row : report.rows)
    manifest << "run eps=" << format_number(row.eps) << " dt=" << format_number(row.dt)
             << " steps=" << row.steps << '\n';
  report.manifest = manifest.str();
  return report;
}

}  // namespace jumpkit

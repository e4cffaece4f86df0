#pragma once

#include <span>
#include <string>
#include <vector>

#include "jumpkit/grid_field.hpp"
#include "jumpkit/hj_solver.hpp"
#include "jumpkit/measure.hpp"

namespace jumpkit {

// Periodic 1-D grid x_i = lower + i * length / cells, i < cells.
struct PeriodicGrid {
  double lower = -2.0;
  double length = 4.0;
  std::size_t cells = 2000;

  double dx() const noexcept { return length / static_cast<double>(cells); }
  std::vector<double> axis() const { return uniform_axis(lower, dx(), cells); }
  // phi0 sampled at the grid points as a single-slice field at t = 0.
  GridField sample(const Potential& phi0) const;
};

struct KineticOptions {
  double cfl = 0.5;
  std::vector<double> output_times;  // besides t = 0; empty means {T}
  int threads = 0;
  double bound_tolerance = 1e-8;
  bool check_bounds = true;
};

// phi^eps(t, x, v) on a periodic grid; the y axis of field holds the
// velocity nodes of the measure's quadrature.
struct KineticField {
  double eps = 0.0;
  GridField field;
  std::vector<double> weights;  // quadrature weights of M at the nodes
  double dt = 0.0;
  long steps = 0;
  double lipschitz0 = 0.0;  // discrete Lipschitz constant of phi0
  double lower_bound = 0.0;  // min phi0
  double upper_bound = 0.0;  // max phi0
};

// Solves d_t phi + v d_x phi = int M' (1 - exp((phi - phi') / eps)) dv' from
// v-independent data. Upwind transport, then an implicit local solve of the
// exchange term per cell, with dt <= min(cfl dx / R, eps / 4).
//
// After every output time the a priori bounds are asserted:
//   min phi0 <= phi <= max phi0, and
//   |phi(v) - phi(v')| <= t Lip(phi0) |v - v'| for neighbouring nodes,
// raising BoundViolation beyond bound_tolerance.
KineticField kinetic_solve(const VelocityMeasure& m, const GridField& phi0, double eps, double T,
                           const KineticOptions& options = {});

struct LinearFResult {
  double eps = 0.0;
  GridField ratio;      // f / M at the velocity nodes
  GridField potential;  // -eps log(f / M)
  std::vector<double> mass;  // int int f dx dv at each output time
  double max_mass_step_drift = 0.0;  // largest relative change over a single step
  double dt = 0.0;
  long steps = 0;
};

// Linear relaxation d_t f + v d_x f = (M rho - f) / eps from f0 = M exp(-phi0 / eps)
// with the same grid and time step as kinetic_solve. Throws UnderflowRisk
// when max |phi0| / eps > 600.
LinearFResult linear_f_solve(const VelocityMeasure& m, const GridField& phi0, double eps,
                             double T, const KineticOptions& options = {});

struct ConvergenceRow {
  double eps = 0.0;
  double sup_error = 0.0;  // max over output times, x and v of |phi^eps - phi|
  double v_spread = 0.0;   // max over output times and x of (max_v - min_v) phi^eps
  long steps = 0;
  double dt = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::string manifest;

  bool errors_decreasing() const;
  bool spread_decreasing() const;
};

// Runs kinetic_solve for each eps (strictly decreasing) and compares with the
// Hopf-Lax solution of the limit equation on the same grid and times.
ConvergenceReport convergence_report(const VelocityMeasure& m, const Potential& phi0,
                                     const std::vector<double>& eps_list, double T,
                                     const PeriodicGrid& grid, const KineticOptions& options = {});

namespace detail {

// Exchange integral sum_k w_k (1 - exp((phi - phi_k) / eps)), with or
// without shifting the exponents by min_k phi_k.
double exchange_integral(double phi, std::span<const double> phis, std::span<const double> weights,
                         double eps, bool shifted);

// Solves phi = phi_star + dt (1 - s exp((phi - phi_min) / eps)) for phi,
// where s = sum_k w_k exp(-(phi_k - phi_min) / eps) in (0, 1].
double implicit_exchange(double phi_star, double phi_min, double phi_max, double s, double dt,
                         double eps);

}  // namespace detail

}  // namespace jumpkit

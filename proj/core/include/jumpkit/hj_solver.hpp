#pragma once

#include <functional>
#include <span>
#include <vector>

#include "jumpkit/grid_field.hpp"
#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/measure.hpp"

namespace jumpkit {

// Initial potential phi0(x) for x in R^n, n = 1 or 2.
using Potential = std::function<double(std::span<const double>)>;

// phi0 extended periodically from [lower, lower + period) along every axis.
Potential periodic(Potential phi0, double lower, double period);

struct HopfLaxOptions {
  double lattice_step = 1e-3;  // spacing of the L table, in units of R
  int refine_points = 81;      // 2-D refinement grid per axis over the disc |u| <= R
  double polish_tol = 1e-10;
  int threads = 0;  // 0 = hardware concurrency
};

// phi(t, x) = min over |u| <= R of phi0(x - t u) + t L(u), the viscosity
// solution of d_t phi + H(grad phi) = 0 for convex H.
//
// L is tabulated once per measure with its derivative (the maximizing
// momentum) and read back by cubic Hermite interpolation. Any 1-D measure is
// supported; in 2-D only rotationally invariant measures, whose L is radial.
class HopfLax {
 public:
  explicit HopfLax(const VelocityMeasure& m, HopfLaxOptions options = {});

  int dimension() const noexcept { return dimension_; }
  double speed() const noexcept { return speed_; }

  // Interpolated L(u); +inf outside the hull.
  double rate(std::span<const double> u) const;

  double operator()(const Potential& phi0, double t, std::span<const double> x) const;

  // Evaluates at every (time, grid point); y empty for 1-D.
  GridField solve(const Potential& phi0, const std::vector<double>& times,
                  const std::vector<double>& x, const std::vector<double>& y = {}) const;

 private:
  double rate_1d(double u) const;
  double minimize_1d(const Potential& phi0, double t, double x) const;
  double minimize_2d(const Potential& phi0, double t, std::span<const double> x) const;

  HopfLaxOptions options_;
  int dimension_ = 1;
  double speed_ = 0.0;  // R
  // Table over [lo_, lo_ + step_ * (n - 1)]: velocity in 1-D, radius in 2-D.
  double lo_ = 0.0;
  double hi_ = 0.0;
  double step_ = 0.0;
  std::vector<double> value_;
  std::vector<double> slope_;
  std::vector<bool> exact_slope_;  // false where L' is only the search cap
};

// Convenience wrapper building a one-off HopfLax.
double hopf_lax(const VelocityMeasure& m, const Potential& phi0, double t,
                std::span<const double> x);

enum class BoundaryCondition { Periodic, Extrapolate };

struct LaxFriedrichsOptions {
  double cfl = 0.5;  // in (0, 1]
  // Requested step; 0 takes the largest step allowed by cfl. A positive value
  // above the bound raises CflViolation.
  double dt = 0.0;
  BoundaryCondition boundary = BoundaryCondition::Extrapolate;
  std::vector<double> output_times;  // besides t = 0; empty means {T}
  int threads = 0;
  SolverTolerances tolerances;
};

// Monotone Lax-Friedrichs scheme with artificial viscosity R per axis.
// initial holds phi0 on a uniform grid at a single time. With periodic
// boundaries the period is nx * dx.
GridField lax_friedrichs_solve(const VelocityMeasure& m, const GridField& initial, double T,
                               const LaxFriedrichsOptions& options = {});

namespace detail {

// One Lax-Friedrichs update of the centre value from its neighbours; exposed
// for the monotonicity tests. Hp evaluates H at a momentum.
double lax_friedrichs_update_1d(double left, double centre, double right, double dx, double dt,
                                double viscosity, const std::function<double(double)>& Hp);

}  // namespace detail

}  // namespace jumpkit

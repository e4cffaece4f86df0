#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "jumpkit/measure.hpp"
#include "jumpkit/vec.hpp"

namespace jumpkit {

enum class Regime { Regular, Singular };

std::string_view to_string(Regime regime) noexcept;

struct SolverTolerances {
  double residual = 1e-12;  // stop when |F(H) - 1| falls below this
  int max_iterations = 200;
  double initial_offset_scale = 1e-2;  // delta0 = scale * (1 + |mu|)
  double min_offset = 1e-14;
  int max_doublings = 60;
};

struct HamiltonianEval {
  Vec p;
  double H = 0.0;
  double mu = 0.0;
  Regime regime = Regime::Regular;
  // Gradient of H; in the singular regime the maximizer w, an element of the
  // subdifferential.
  Vec grad;
  double residual = 0.0;  // |F(H) - 1|, 0 in the singular regime
  int iterations = 0;
};

// Singular iff the singular integral is <= 1; p = 0 is always Regular.
Regime classify(const VelocityMeasure& m, std::span<const double> p);

// H(p), its regime and gradient.
HamiltonianEval solve_H(const VelocityMeasure& m, std::span<const double> p,
                        const SolverTolerances& tol = {});

// Value-only path used inside the PDE schemes; skips the gradient.
struct HamiltonianValue {
  double H = 0.0;
  double mu = 0.0;
  double gap = 0.0;  // H - (mu - 1); 0 in the singular regime
  Regime regime = Regime::Regular;
  double residual = 0.0;
  int iterations = 0;
};

HamiltonianValue hamiltonian_value(const VelocityMeasure& m, std::span<const double> p,
                                   const SolverTolerances& tol = {});

Vec grad_H(const VelocityMeasure& m, std::span<const double> p, const SolverTolerances& tol = {});

// Positive eigen-measure of Q -> (v.p - 1) Q + int M Q at eigenvalue H(p).
struct EigenPair {
  Vec p;
  double H = 0.0;
  double mu = 0.0;
  Regime regime = Regime::Regular;
  // Density part Q(v) = density_scale / (1 + H - v.p).
  double density_scale = 0.0;
  double atom_weight = 0.0;
  std::optional<Vec> atom_location;

  double density_at(std::span<const double> v) const;
};

EigenPair eigenpair(const VelocityMeasure& m, std::span<const double> p,
                    const SolverTolerances& tol = {});

// Radius of the boundary of Sing(M) along a unit direction; +inf if no
// singular momentum exists below radius 1e6.
double sing_boundary_radius(const VelocityMeasure& m, std::span<const double> direction,
                            double tolerance = 1e-10);

struct LegendreEval {
  Vec v;
  double L = 0.0;
  Vec argmax_p;
  // The supremum is approached only as |p| grows without bound (v on the
  // hull boundary); L holds the value at the search cap.
  bool boundary = false;
  int evaluations = 0;
};

struct LegendreOptions {
  double p_cap = 1e3;
  double x_tol = 1e-10;
  double stagnation = 1e-9;
  int max_sweeps = 500;
};

// L(v) = sup_p [p.v - H(p)]. Throws OutsideHull when v is certified outside
// Conv(V).
LegendreEval legendre(const VelocityMeasure& m, std::span<const double> v,
                      const LegendreOptions& options = {});

}  // namespace jumpkit

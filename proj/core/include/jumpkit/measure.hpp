#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jumpkit/quadrature.hpp"
#include "jumpkit/vec.hpp"

namespace jumpkit {

inline constexpr int kDefaultQuadratureOrder = 200;

enum class MeasureKind { UniformBall, UniformInterval, Atomic, TabulatedRadial };

std::string_view to_string(MeasureKind kind) noexcept;

struct Atom {
  Vec velocity;
  double weight = 0.0;
};

struct UniformBallSpec {
  int dimension = 1;
  double radius = 1.0;
};

struct UniformIntervalSpec {
  double lower = -1.0;
  double upper = 1.0;
};

struct AtomicSpec {
  std::vector<Atom> atoms;
  // Skips the interior-of-hull check. Such measures suit the simulator but
  // not the Hamiltonian routines, which assume 0 inside Conv(V).
  bool allow_degenerate_hull = false;
};

// M(v) = g(|v|) with g piecewise linear through (radii[k], density[k]).
// The density is renormalized to unit mass at construction.
struct TabulatedRadialSpec {
  int dimension = 1;
  std::vector<double> radii;
  std::vector<double> density;
};

using MeasureSpec =
    std::variant<UniformBallSpec, UniformIntervalSpec, AtomicSpec, TabulatedRadialSpec>;

// Discrete velocity set used by the 1-D kinetic solvers: nodes ascending,
// weights already multiplied by M and summing to 1.
struct VelocityQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
struct RadialProfile;
}

// A compactly supported velocity probability measure with 0 in the interior
// of the convex hull of its support. Immutable after construction; copies
// share the precomputed quadrature tables.
class VelocityMeasure {
 public:
  static VelocityMeasure uniform_ball(int dimension, double radius,
                                      int quadrature_order = kDefaultQuadratureOrder);
  static VelocityMeasure uniform_interval(double lower, double upper,
                                          int quadrature_order = kDefaultQuadratureOrder);
  static VelocityMeasure atomic(std::vector<Atom> atoms, bool allow_degenerate_hull = false);
  static VelocityMeasure tabulated_radial(int dimension, std::vector<double> radii,
                                          std::vector<double> density,
                                          int quadrature_order = kDefaultQuadratureOrder);
  static VelocityMeasure from_spec(const MeasureSpec& spec,
                                   int quadrature_order = kDefaultQuadratureOrder);

  MeasureKind kind() const noexcept;
  const MeasureSpec& spec() const noexcept { return spec_; }
  int dimension() const noexcept { return dimension_; }
  int quadrature_order() const noexcept { return quadrature_order_; }

  // Smallest R with M = 0 outside the ball of radius R.
  double support_radius() const noexcept { return support_radius_; }

  // Ball and tabulated-radial kinds, and intervals symmetric about 0.
  bool rotationally_invariant() const noexcept;

  Vec mean() const;

  // Stable textual identity of the measure, used in run manifests.
  std::string fingerprint() const;

  // Only for dimension 1.
  VelocityQuadrature velocity_quadrature() const;

  // Density of M at v (atoms report 0; use the atom list instead).
  double density(std::span<const double> v) const;

  const detail::RadialProfile* radial_profile() const noexcept { return radial_.get(); }

 private:
  VelocityMeasure() = default;
  void validate_hull() const;

  MeasureSpec spec_;
  int dimension_ = 1;
  int quadrature_order_ = kDefaultQuadratureOrder;
  double support_radius_ = 0.0;
  std::shared_ptr<const detail::RadialProfile> radial_;
  QuadratureRule interval_rule_;  // GL on [lower, upper] for the interval kind
};

enum class ArgmaxShape { Point, Face, Whole };

struct SupportQuery {
  Vec p;
  double mu = 0.0;
  // Arg mu(p): the unique point, or for a face the tied atoms sorted
  // lexicographically. Empty when shape == Whole (p = 0).
  std::vector<Vec> maximizers;
  ArgmaxShape shape = ArgmaxShape::Point;

  bool degenerate() const noexcept { return shape != ArgmaxShape::Point; }
};

SupportQuery support_mu(const VelocityMeasure& m, std::span<const double> p);

// mu(p) alone, without the maximizer bookkeeping.
double support_value(const VelocityMeasure& m, std::span<const double> p);

// I(p) = int M(v) / (mu(p) - v.p) dv in (0, +inf]. Throws ZeroMomentum at p = 0.
double singular_integral(const VelocityMeasure& m, std::span<const double> p);

// F(h) = int M(v) / (1 + h - v.p) dv. Throws DenominatorNotPositive when
// 1 + h <= mu(p).
double resolvent_integral(const VelocityMeasure& m, std::span<const double> p, double h);

// int M / (1 + h - v.p)^2 dv.
double resolvent_moment0(const VelocityMeasure& m, std::span<const double> p, double h);

// int M v / (1 + h - v.p)^2 dv.
Vec resolvent_moment1(const VelocityMeasure& m, std::span<const double> p, double h);

namespace detail {

// The same integrals parametrized by the gap g = 1 + h - mu(p) > 0, which
// keeps full relative precision when h sits just above mu(p) - 1.
double resolvent_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap);
double moment0_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap);
Vec moment1_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap);

// Rotationally invariant measures reduce every integral against a function of
// v.p to a 1-D integral over the polar angle theta between v and p:
//   int M(v) K(v.p) dv = int_0^pi w(theta) K(R |p| cos theta) dtheta,
// where w integrates to 1.
struct RadialProfile {
  int dimension = 1;
  double radius = 1.0;
  QuadratureRule theta_rule;            // GL on [0, pi]
  std::vector<double> weighted_nodes;   // theta_rule.weights[i] * w(theta_i)
  std::vector<double> cos_nodes;        // cos(theta_i)
  std::vector<double> half_sin2_nodes;  // 2 sin^2(theta_i / 2) = 1 - cos(theta_i)
  // kappa = int w(theta) / (1 - cos theta) dtheta, so I(p) = kappa / (R |p|).
  // +inf when the integral diverges.
  double singular_constant = 0.0;
  std::function<double(double)> angular_weight;
};

}  // namespace detail

}  // namespace jumpkit

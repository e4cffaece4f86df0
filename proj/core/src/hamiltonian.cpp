#include "jumpkit/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "jumpkit/errors.hpp"
#include "jumpkit/roots.hpp"

namespace jumpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_momentum(const VelocityMeasure& m, std::span<const double> p, const char* who) {
  if (p.size() != static_cast<std::size_t>(m.dimension()))
    fail(ErrorCode::InvalidArgument, std::string(who) + ": dimension mismatch");
  if (!all_finite(p)) fail(ErrorCode::InvalidArgument, std::string(who) + ": non-finite input");
}

}  // namespace

std::string_view to_string(Regime regime) noexcept {
  return regime == Regime::Regular ? "regular" : "singular";
}

Regime classify(const VelocityMeasure& m, std::span<const double> p) {
  check_momentum(m, p, "classify");
  if (is_zero(p)) return Regime::Regular;
  return singular_integral(m, p) <= 1.0 ? Regime::Singular : Regime::Regular;
}

HamiltonianValue hamiltonian_value(const VelocityMeasure& m, std::span<const double> p,
                                   const SolverTolerances& tol) {
  check_momentum(m, p, "solve_H");
  HamiltonianValue out;
  if (is_zero(p)) {
    // F(0) = int M = 1 at p = 0.
    out.gap = 1.0;
    return out;
  }
  const double mu = support_value(m, p);
  out.mu = mu;
  const auto singular = [&] {
    out.H = mu - 1.0;
    out.gap = 0.0;
    out.regime = Regime::Singular;
    out.residual = 0.0;
    return out;
  };
  const double sing = singular_integral(m, p);
  if (sing <= 1.0) return singular();

  const auto F = [&](double gap) { return detail::resolvent_gap(m, p, mu, gap); };
  const double scale = 1.0 + std::abs(mu);
  double lo = tol.initial_offset_scale * scale;
  // Within 1e-8 of the boundary of Sing(M) the root can sit below any
  // resolvable gap; there the momentum is treated as singular. Elsewhere the
  // gap may be tiny (large |p| with a divergent singular integral) and the
  // search continues down to the smallest normal number.
  const double lo_min = sing <= 1.0 + 1e-8 ? tol.min_offset * scale
                                           : std::numeric_limits<double>::min() * scale;
  double f_lo = F(lo);
  while (f_lo < 1.0) {
    if (lo <= lo_min) return singular();
    lo = std::max(lo / 10.0, lo_min);
    f_lo = F(lo);
  }
  if (f_lo == 1.0) {
    out.H = (mu - 1.0) + lo;
    out.gap = lo;
    return out;
  }
  double hi = 2.0 * lo;
  int doublings = 0;
  while (F(hi) >= 1.0) {
    if (++doublings > tol.max_doublings)
      fail(ErrorCode::NoBracket, "solve_H: cannot bring F below 1 at p = " + format_vec(p));
    hi *= 2.0;
  }
  const auto root = safeguarded_newton(
      [&](double gap) {
        return ValueAndSlope{F(gap) - 1.0, -detail::moment0_gap(m, p, mu, gap)};
      },
      lo, hi, tol.residual, tol.max_iterations);
  out.gap = root.x;
  out.H = (mu - 1.0) + root.x;
  out.residual = std::abs(root.f);
  out.iterations = root.iterations;
  return out;
}

namespace {

Vec singular_gradient(const VelocityMeasure& m, std::span<const double> p) {
  const SupportQuery q = support_mu(m, p);
  if (q.shape != ArgmaxShape::Point)
    fail(ErrorCode::DegenerateMaximizer,
         "grad_H: maximizer set at p = " + format_vec(p) + " is not a single point");
  return q.maximizers.front();
}

Vec regular_gradient(const VelocityMeasure& m, std::span<const double> p,
                     const HamiltonianValue& value) {
  if (is_zero(p)) return m.mean();
  const double m0 = detail::moment0_gap(m, p, value.mu, value.gap);
  Vec g = detail::moment1_gap(m, p, value.mu, value.gap);
  for (double& x : g) x /= m0;
  return g;
}

}  // namespace

HamiltonianEval solve_H(const VelocityMeasure& m, std::span<const double> p,
                        const SolverTolerances& tol) {
  const HamiltonianValue value = hamiltonian_value(m, p, tol);
  HamiltonianEval out;
  out.p.assign(p.begin(), p.end());
  out.H = value.H;
  out.mu = value.mu;
  out.regime = value.regime;
  out.residual = value.residual;
  out.iterations = value.iterations;
  out.grad = value.regime == Regime::Singular ? singular_gradient(m, p)
                                              : regular_gradient(m, p, value);
  return out;
}

Vec grad_H(const VelocityMeasure& m, std::span<const double> p, const SolverTolerances& tol) {
  const HamiltonianValue value = hamiltonian_value(m, p, tol);
  return value.regime == Regime::Singular ? singular_gradient(m, p)
                                          : regular_gradient(m, p, value);
}

double EigenPair::density_at(std::span<const double> v) const {
  if (regime == Regime::Regular) return density_scale / (1.0 + H - dot(v, p));
  return density_scale / (mu - dot(v, p));
}

EigenPair eigenpair(const VelocityMeasure& m, std::span<const double> p,
                    const SolverTolerances& tol) {
  const HamiltonianValue value = hamiltonian_value(m, p, tol);
  EigenPair out;
  out.p.assign(p.begin(), p.end());
  out.H = value.H;
  out.mu = value.mu;
  out.regime = value.regime;
  if (value.regime == Regime::Regular) {
    // Normalize so that int M Q = density_scale * F(H) = 1.
    const double f = detail::resolvent_gap(m, p, value.mu, value.gap);
    out.density_scale = 1.0 / f;
    return out;
  }
  out.density_scale = 1.0;
  out.atom_weight = std::max(0.0, 1.0 - singular_integral(m, p));
  if (out.atom_weight > 0.0) {
    // Tie-break on faces: lexicographically smallest maximizer (already sorted).
    out.atom_location = support_mu(m, p).maximizers.front();
  }
  return out;
}

double sing_boundary_radius(const VelocityMeasure& m, std::span<const double> direction,
                            double tolerance) {
  check_momentum(m, direction, "sing_boundary_radius");
  if (std::abs(norm(direction) - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "sing_boundary_radius: direction must have unit norm");
  constexpr double kMaxRadius = 1e6;
  const auto is_singular = [&](double rho) {
    const Vec q = scaled(direction, rho);
    return classify(m, q) == Regime::Singular;
  };
  if (!is_singular(kMaxRadius)) return kInf;
  // Sing(M)^c is convex and contains 0, so each ray crosses its boundary once.
  double lo = 0.0;
  double hi = 1.0;
  while (!is_singular(hi)) {
    lo = hi;
    hi = std::min(2.0 * hi, kMaxRadius);
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (is_singular(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

bool certified_outside(const VelocityMeasure& m, std::span<const double> v) {
  constexpr double kSlack = 1e-12;
  if (m.radial_profile()) return norm(v) > m.support_radius() * (1.0 + kSlack);
  if (const auto* s = std::get_if<UniformIntervalSpec>(&m.spec()))
    return v[0] < s->lower - kSlack || v[0] > s->upper + kSlack;
  // Atomic: look for a separating direction u with u.v > mu(u).
  const auto n = v.size();
  std::vector<Vec> dirs;
  if (!is_zero(v)) dirs.push_back(scaled(v, 1.0 / norm(v)));
  for (std::size_t k = 0; k < n; ++k) {
    Vec e(n, 0.0);
    e[k] = 1.0;
    dirs.push_back(e);
    e[k] = -1.0;
    dirs.push_back(e);
  }
  if (n > 1) {
    std::mt19937_64 rng(0xd1ce);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 4000; ++k) {
      Vec u(n);
      for (double& x : u) x = gauss(rng);
      const double len = norm(u);
      for (double& x : u) x /= len;
      dirs.push_back(std::move(u));
    }
  }
  for (const Vec& u : dirs)
    if (dot(u, v) > support_value(m, u) + kSlack) return true;
  return false;
}

LegendreEval legendre_radial(const VelocityMeasure& m, std::span<const double> v,
                             const LegendreOptions& opt) {
  LegendreEval out;
  out.v.assign(v.begin(), v.end());
  const auto n = v.size();
  const double speed = norm(v);
  if (speed == 0.0) {
    // Symmetric measure: H is even and convex, so p = 0 is the maximizer.
    out.argmax_p.assign(n, 0.0);
    out.L = -hamiltonian_value(m, out.argmax_p).H;
    return out;
  }
  const Vec dir = scaled(v, 1.0 / speed);
  const auto objective = [&](double rho) {
    ++out.evaluations;
    const Vec q = scaled(dir, rho);
    return rho * speed - hamiltonian_value(m, q).H;
  };
  const auto slope = [&](double rho) {
    ++out.evaluations;
    const Vec q = scaled(dir, rho);
    return speed - dot(dir, grad_H(m, q));
  };
  double hi = 1.0;
  while (slope(hi) > 0.0) {
    if (hi >= opt.p_cap) {
      out.boundary = true;
      out.argmax_p = scaled(dir, opt.p_cap);
      out.L = objective(opt.p_cap);
      return out;
    }
    hi = std::min(2.0 * hi, opt.p_cap);
  }
  const double lo = hi == 1.0 ? 0.0 : 0.5 * hi;
  const auto best = golden_section_max(objective, lo, hi, opt.x_tol * (1.0 + hi));
  out.argmax_p = scaled(dir, best.x);
  out.L = best.value;
  return out;
}

LegendreEval legendre_coordinate(const VelocityMeasure& m, std::span<const double> v,
                                 const LegendreOptions& opt) {
  LegendreEval out;
  out.v.assign(v.begin(), v.end());
  const auto n = v.size();
  Vec p(n, 0.0);
  const auto value_at = [&](const Vec& q) {
    ++out.evaluations;
    return dot(q, v) - hamiltonian_value(m, q).H;
  };
  double current = value_at(p);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_slope = 0.0;
    double max_move = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto moved = [&](double t) {
        Vec q = p;
        q[k] += t;
        return q;
      };
      const auto slope = [&](double t) {
        ++out.evaluations;
        return v[k] - grad_H(m, moved(t))[k];
      };
      const double s0 = slope(0.0);
      max_slope = std::max(max_slope, std::abs(s0));
      if (std::abs(s0) < 1e-14) continue;
      const double sign = s0 > 0.0 ? 1.0 : -1.0;
      // Expand the step (doubling) until the slope changes sign.
      double near = 0.0;
      double far = sign;
      while (sign * slope(far) > 0.0) {
        if (std::abs(p[k] + far) >= opt.p_cap) {
          out.boundary = true;
          p[k] += far;
          out.argmax_p = p;
          out.L = value_at(p);
          return out;
        }
        near = far;
        far *= 2.0;
      }
      const double a = std::min(near, far);
      const double b = std::max(near, far);
      const auto best = golden_section_max([&](double t) { return value_at(moved(t)); }, a, b,
                                           opt.x_tol * (1.0 + std::abs(b)));
      p[k] += best.x;
      current = best.value;
      max_move = std::max(max_move, std::abs(best.x));
    }
    if (max_move < opt.stagnation || max_slope < 1e-12) break;
  }
  out.argmax_p = p;
  out.L = current;
  return out;
}

}  // namespace

LegendreEval legendre(const VelocityMeasure& m, std::span<const double> v,
                      const LegendreOptions& options) {
  check_momentum(m, v, "legendre");
  if (certified_outside(m, v))
    fail(ErrorCode::OutsideHull, "legendre: v = " + format_vec(v) + " lies outside Conv(V)");
  return m.rotationally_invariant() ? legendre_radial(m, v, options)
                                    : legendre_coordinate(m, v, options);
}

}  // namespace jumpkit

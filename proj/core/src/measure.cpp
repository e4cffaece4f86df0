#include "jumpkit/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "jumpkit/errors.hpp"

namespace jumpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// Relative gap below which radial integrals switch from the fixed
// Gauss-Legendre rule to graded adaptive panels around theta = 0.
constexpr double kNearThreshold = 0.05;

// Volume of the unit ball in R^k.
double unit_ball_volume(int k) {
  return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Piecewise-linear radial density, normalized at construction.
struct RadialTable {
  int dimension;
  std::vector<double> radii;
  std::vector<double> density;

  double operator()(double s) const {
    if (s < 0.0 || s > radii.back()) return 0.0;
    const auto it = std::upper_bound(radii.begin(), radii.end(), s);
    if (it == radii.end()) return density.back();
    const auto k = static_cast<std::size_t>(it - radii.begin());
    const double t = (s - radii[k - 1]) / (radii[k] - radii[k - 1]);
    return density[k - 1] + t * (density[k] - density[k - 1]);
  }

  // Density of the projection u = v.e for a unit vector e, at the point
  // u = R cos(theta). The half-chord is formed from sin(theta) to keep
  // precision as theta -> 0.
  double marginal_at_angle(double theta) const {
    const double big_r = radii.back();
    const double u = big_r * std::cos(theta);
    const double au = std::abs(u);
    if (dimension == 1) return (*this)(std::min(au, big_r));
    // Integrate g(sqrt(u^2 + rho^2)) rho^(n-2) over rho in [0, R sin(theta)],
    // split where the radius crosses a knot.
    static const QuadratureRule rule = gauss_legendre(16);
    std::vector<double> breaks{0.0};
    for (double s : radii)
      if (s > au && s < big_r) breaks.push_back(std::sqrt((s - au) * (s + au)));
    breaks.push_back(big_r * std::abs(std::sin(theta)));
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double a = breaks[k];
      const double b = breaks[k + 1];
      if (!(b > a)) continue;
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const double rho = mid + half * rule.nodes[i];
        total += half * rule.weights[i] * (*this)(std::min(std::sqrt(au * au + rho * rho), big_r)) *
                 std::pow(rho, dimension - 2);
      }
    }
    const double sphere = (dimension - 1) * unit_ball_volume(dimension - 1);
    return sphere * total;
  }
};

// The fixed rule is composite Gauss-Legendre over panels split at the
// angles where the weight has kinks; about `order` nodes in total.
std::shared_ptr<detail::RadialProfile> make_profile(int dimension, double radius, int order,
                                                    std::function<double(double)> weight,
                                                    std::vector<double> kinks = {}) {
  auto profile = std::make_shared<detail::RadialProfile>();
  profile->dimension = dimension;
  profile->radius = radius;
  kinks.push_back(0.0);
  kinks.push_back(kPi);
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              kinks.end());
  const std::size_t panels = kinks.size() - 1;
  const int per_panel = std::max(8, order / static_cast<int>(panels));
  auto& rule = profile->theta_rule;
  for (std::size_t k = 0; k < panels; ++k) {
    const QuadratureRule piece = gauss_legendre(per_panel, kinks[k], kinks[k + 1]);
    rule.nodes.insert(rule.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    rule.weights.insert(rule.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  profile->weighted_nodes.resize(rule.size());
  profile->cos_nodes.resize(rule.size());
  profile->half_sin2_nodes.resize(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double th = rule.nodes[i];
    profile->weighted_nodes[i] = rule.weights[i] * weight(th);
    profile->cos_nodes[i] = std::cos(th);
    const double s = std::sin(0.5 * th);
    profile->half_sin2_nodes[i] = 2.0 * s * s;
  }
  profile->angular_weight = std::move(weight);
  return profile;
}

// kappa for a tabulated profile: integrate w / (1 - cos) over decades of
// theta towards 0 and extrapolate the tail geometrically. Divergence is
// declared when the extrapolated total exceeds 1e6.
double tabulated_singular_constant(const detail::RadialProfile& profile) {
  const auto& w = profile.angular_weight;
  const auto integrand = [&](double th) {
    const double s = std::sin(0.5 * th);
    return w(th) / (2.0 * s * s);
  };
  double total = integrate_adaptive(integrand, 1.0, kPi, 1e-15, 1e-13).value;
  double prev_increment = -1.0;
  double increment = 0.0;
  double hi = 1.0;
  for (int decade = 0; decade < 12; ++decade) {
    const double lo = hi / 10.0;
    prev_increment = increment;
    increment = integrate_adaptive(integrand, lo, hi, 1e-18, 1e-13).value;
    total += increment;
    hi = lo;
  }
  if (increment <= 0.0) return total;
  const double ratio = prev_increment > 0.0 ? increment / prev_increment : 1.0;
  if (ratio >= 1.0) return kInf;
  const double tail = increment * ratio / (1.0 - ratio);
  if (total + tail > 1e6) return kInf;
  return total + tail;
}

}  // namespace

std::string_view to_string(MeasureKind kind) noexcept {
  switch (kind) {
    case MeasureKind::UniformBall: return "uniform_ball";
    case MeasureKind::UniformInterval: return "uniform_interval";
    case MeasureKind::Atomic: return "atomic";
    case MeasureKind::TabulatedRadial: return "tabulated_radial";
  }
  return "unknown";
}

VelocityMeasure VelocityMeasure::uniform_ball(int dimension, double radius, int quadrature_order) {
  if (dimension < 1) fail(ErrorCode::InvalidMeasure, "uniform_ball: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius))
    fail(ErrorCode::InvalidMeasure, "uniform_ball: radius must be positive and finite");
  if (quadrature_order < 2)
    fail(ErrorCode::InvalidMeasure, "uniform_ball: quadrature_order must be >= 2");
  VelocityMeasure m;
  m.spec_ = UniformBallSpec{dimension, radius};
  m.dimension_ = dimension;
  m.quadrature_order_ = quadrature_order;
  m.support_radius_ = radius;
  // Marginal of v1/r is c_n (1-u^2)^((n-1)/2); with u = cos(theta) the
  // angular weight is c_n sin^n(theta).
  const double c_n = unit_ball_volume(dimension - 1) / unit_ball_volume(dimension);
  auto profile = make_profile(dimension, radius, quadrature_order, [c_n, dimension](double th) {
    return c_n * std::pow(std::sin(th), dimension);
  });
  if (dimension == 1) {
    profile->singular_constant = kInf;
  } else {
    // w / (1 - cos) = c_n (1 + cos) sin^(n-2): smooth, so the fixed rule is exact
    // to rounding.
    const auto& rule = profile->theta_rule;
    double kappa = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double th = rule.nodes[i];
      kappa += rule.weights[i] * c_n * (1.0 + std::cos(th)) * std::pow(std::sin(th), dimension - 2);
    }
    profile->singular_constant = kappa;
  }
  m.radial_ = std::move(profile);
  if (dimension == 1) m.interval_rule_ = gauss_legendre(quadrature_order, -radius, radius);
  return m;
}

VelocityMeasure VelocityMeasure::uniform_interval(double lower, double upper,
                                                  int quadrature_order) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
    fail(ErrorCode::InvalidMeasure, "uniform_interval: need finite lower < upper");
  if (!(lower < 0.0 && upper > 0.0))
    fail(ErrorCode::InvalidMeasure,
         "uniform_interval: 0 must lie in the interior of the support (lower < 0 < upper)");
  if (quadrature_order < 2)
    fail(ErrorCode::InvalidMeasure, "uniform_interval: quadrature_order must be >= 2");
  VelocityMeasure m;
  m.spec_ = UniformIntervalSpec{lower, upper};
  m.dimension_ = 1;
  m.quadrature_order_ = quadrature_order;
  m.support_radius_ = std::max(-lower, upper);
  m.interval_rule_ = gauss_legendre(quadrature_order, lower, upper);
  return m;
}

VelocityMeasure VelocityMeasure::atomic(std::vector<Atom> atoms, bool allow_degenerate_hull) {
  if (atoms.empty()) fail(ErrorCode::InvalidMeasure, "atomic: at least one atom required");
  const std::size_t n = atoms.front().velocity.size();
  if (n == 0) fail(ErrorCode::InvalidMeasure, "atomic: velocities must have dimension >= 1");
  double total = 0.0;
  double radius = 0.0;
  for (const Atom& a : atoms) {
    if (a.velocity.size() != n)
      fail(ErrorCode::InvalidMeasure, "atomic: all velocities must share one dimension");
    if (!all_finite(a.velocity)) fail(ErrorCode::InvalidMeasure, "atomic: non-finite velocity");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight))
      fail(ErrorCode::InvalidMeasure, "atomic: weights must be positive");
    total += a.weight;
    radius = std::max(radius, norm(a.velocity));
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail(ErrorCode::InvalidMeasure, "atomic: weights must sum to 1 (got " + fmt_double(total) + ")");
  VelocityMeasure m;
  m.spec_ = AtomicSpec{std::move(atoms), allow_degenerate_hull};
  m.dimension_ = static_cast<int>(n);
  m.quadrature_order_ = 1;
  m.support_radius_ = radius;
  if (!allow_degenerate_hull) m.validate_hull();
  return m;
}

VelocityMeasure VelocityMeasure::tabulated_radial(int dimension, std::vector<double> radii,
                                                  std::vector<double> density,
                                                  int quadrature_order) {
  if (dimension < 1) fail(ErrorCode::InvalidMeasure, "tabulated_radial: dimension must be >= 1");
  if (radii.size() < 2 || radii.size() != density.size())
    fail(ErrorCode::InvalidMeasure,
         "tabulated_radial: need >= 2 samples with matching radii and density");
  if (radii.front() != 0.0)
    fail(ErrorCode::InvalidMeasure, "tabulated_radial: radii must start at 0");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!std::isfinite(radii[k]) || !std::isfinite(density[k]) || density[k] < 0.0)
      fail(ErrorCode::InvalidMeasure, "tabulated_radial: samples must be finite, density >= 0");
    if (k > 0 && !(radii[k] > radii[k - 1]))
      fail(ErrorCode::InvalidMeasure, "tabulated_radial: radii must be strictly increasing");
  }
  if (quadrature_order < 2)
    fail(ErrorCode::InvalidMeasure, "tabulated_radial: quadrature_order must be >= 2");
  // Trim trailing zero segments so the last radius is the support radius.
  std::size_t last = radii.size() - 1;
  while (last > 0 && density[last] == 0.0 && density[last - 1] == 0.0) --last;
  radii.resize(last + 1);
  density.resize(last + 1);
  if (last == 0) fail(ErrorCode::InvalidMeasure, "tabulated_radial: density is identically 0");

  // Mass = |S^(n-1)| int g(s) s^(n-1) ds, exact per linear segment with GL.
  const QuadratureRule seg = gauss_legendre(dimension / 2 + 2);
  double mass = 0.0;
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const double a = radii[k];
    const double b = radii[k + 1];
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const double t = 0.5 * (1.0 + seg.nodes[i]);
      const double s = a + t * (b - a);
      const double g = density[k] + t * (density[k + 1] - density[k]);
      mass += 0.5 * (b - a) * seg.weights[i] * g * std::pow(s, dimension - 1);
    }
  }
  mass *= dimension * unit_ball_volume(dimension);
  if (!(mass > 0.0)) fail(ErrorCode::InvalidMeasure, "tabulated_radial: zero total mass");
  for (double& d : density) d /= mass;

  VelocityMeasure m;
  m.spec_ = TabulatedRadialSpec{dimension, radii, density};
  m.dimension_ = dimension;
  m.quadrature_order_ = quadrature_order;
  m.support_radius_ = radii.back();
  auto table = std::make_shared<RadialTable>(RadialTable{dimension, radii, density});
  const double big_r = radii.back();
  std::vector<double> kinks{0.5 * kPi};
  for (double r : radii) {
    if (r <= 0.0 || r >= big_r) continue;
    kinks.push_back(std::acos(r / big_r));
    kinks.push_back(kPi - std::acos(r / big_r));
  }
  auto profile = make_profile(
      dimension, big_r, quadrature_order,
      [table, big_r](double th) {
        return table->marginal_at_angle(th) * big_r * std::sin(th);
      },
      std::move(kinks));
  profile->singular_constant = tabulated_singular_constant(*profile);
  m.radial_ = std::move(profile);
  return m;
}

VelocityMeasure VelocityMeasure::from_spec(const MeasureSpec& spec, int quadrature_order) {
  return std::visit(
      Overloaded{
          [&](const UniformBallSpec& s) {
            return uniform_ball(s.dimension, s.radius, quadrature_order);
          },
          [&](const UniformIntervalSpec& s) {
            return uniform_interval(s.lower, s.upper, quadrature_order);
          },
          [&](const AtomicSpec& s) { return atomic(s.atoms, s.allow_degenerate_hull); },
          [&](const TabulatedRadialSpec& s) {
            return tabulated_radial(s.dimension, s.radii, s.density, quadrature_order);
          },
      },
      spec);
}

void VelocityMeasure::validate_hull() const {
  // 0 in the interior of Conv(V) iff mu(u) > 0 for every unit direction u;
  // checked on a deterministic direction sample.
  std::vector<Vec> directions;
  const auto n = static_cast<std::size_t>(dimension_);
  for (std::size_t k = 0; k < n; ++k) {
    Vec e(n, 0.0);
    e[k] = 1.0;
    directions.push_back(e);
    e[k] = -1.0;
    directions.push_back(e);
  }
  if (n == 2) {
    for (int k = 0; k < 3600; ++k) {
      const double a = 2.0 * kPi * k / 3600.0;
      directions.push_back({std::cos(a), std::sin(a)});
    }
  } else if (n > 2) {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 4000; ++k) {
      Vec u(n);
      for (double& x : u) x = gauss(rng);
      const double len = norm(u);
      for (double& x : u) x /= len;
      directions.push_back(std::move(u));
    }
  }
  for (const Vec& u : directions) {
    if (!(support_value(*this, u) > 0.0))
      fail(ErrorCode::InvalidMeasure,
           "0 is not in the interior of the convex hull of the support (mu(" + format_vec(u) +
               ") <= 0)");
  }
}

MeasureKind VelocityMeasure::kind() const noexcept {
  return static_cast<MeasureKind>(spec_.index());
}

bool VelocityMeasure::rotationally_invariant() const noexcept {
  if (radial_) return true;
  if (const auto* s = std::get_if<UniformIntervalSpec>(&spec_)) return s->lower == -s->upper;
  return false;
}

Vec VelocityMeasure::mean() const {
  Vec out(static_cast<std::size_t>(dimension_), 0.0);
  if (const auto* s = std::get_if<UniformIntervalSpec>(&spec_)) {
    out[0] = 0.5 * (s->lower + s->upper);
  } else if (const auto* a = std::get_if<AtomicSpec>(&spec_)) {
    for (const Atom& atom : a->atoms)
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += atom.weight * atom.velocity[k];
  }
  return out;
}

std::string VelocityMeasure::fingerprint() const {
  std::ostringstream os;
  os << to_string(kind()) << ";n=" << dimension_;
  std::visit(Overloaded{
                 [&](const UniformBallSpec& s) {
                   os << ";r=" << fmt_double(s.radius) << ";q=" << quadrature_order_;
                 },
                 [&](const UniformIntervalSpec& s) {
                   os << ";a=" << fmt_double(s.lower) << ";b=" << fmt_double(s.upper)
                      << ";q=" << quadrature_order_;
                 },
                 [&](const AtomicSpec& s) {
                   os << ";atoms=";
                   for (const Atom& a : s.atoms)
                     os << "(" << format_vec(a.velocity) << ":" << fmt_double(a.weight) << ")";
                   if (s.allow_degenerate_hull) os << ";degenerate_hull";
                 },
                 [&](const TabulatedRadialSpec& s) {
                   // FNV-1a over the normalized table.
                   std::uint64_t h = 1469598103934665603ull;
                   auto mix = [&h](double x) {
                     unsigned char bytes[sizeof(double)];
                     std::memcpy(bytes, &x, sizeof x);
                     for (unsigned char c : bytes) {
                       h ^= c;
                       h *= 1099511628211ull;
                     }
                   };
                   for (double x : s.radii) mix(x);
                   for (double x : s.density) mix(x);
                   char buf[20];
                   std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
                   os << ";R=" << fmt_double(s.radii.back()) << ";k=" << s.radii.size()
                      << ";table=" << buf << ";q=" << quadrature_order_;
                 },
             },
             spec_);
  return os.str();
}

VelocityQuadrature VelocityMeasure::velocity_quadrature() const {
  if (dimension_ != 1)
    fail(ErrorCode::Unsupported, "velocity_quadrature: only 1-D measures have a velocity rule");
  VelocityQuadrature q;
  if (const auto* a = std::get_if<AtomicSpec>(&spec_)) {
    std::vector<std::pair<double, double>> pts;
    for (const Atom& atom : a->atoms) pts.emplace_back(atom.velocity[0], atom.weight);
    std::sort(pts.begin(), pts.end());
    for (const auto& [v, w] : pts) {
      if (!q.nodes.empty() && q.nodes.back() == v) {
        q.weights.back() += w;
      } else {
        q.nodes.push_back(v);
        q.weights.push_back(w);
      }
    }
    return q;
  }
  if (const auto* t = std::get_if<TabulatedRadialSpec>(&spec_)) {
    // Composite GL per linear segment, mirrored to negative velocities.
    const std::size_t segments = t->radii.size() - 1;
    const int per_panel = std::max(2, quadrature_order_ / static_cast<int>(2 * segments));
    const QuadratureRule rule = gauss_legendre(per_panel);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < segments; ++k) {
      const double a = t->radii[k];
      const double b = t->radii[k + 1];
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const double u = 0.5 * (1.0 + rule.nodes[i]);
        const double s = a + u * (b - a);
        const double g = t->density[k] + u * (t->density[k + 1] - t->density[k]);
        const double w = 0.5 * (b - a) * rule.weights[i] * g;
        pts.emplace_back(s, w);
        pts.emplace_back(-s, w);
      }
    }
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (const auto& pt : pts) total += pt.second;
    for (const auto& [v, w] : pts) {
      q.nodes.push_back(v);
      q.weights.push_back(w / total);
    }
    return q;
  }
  double width = 0.0;
  if (const auto* s = std::get_if<UniformIntervalSpec>(&spec_)) width = s->upper - s->lower;
  if (const auto* s = std::get_if<UniformBallSpec>(&spec_)) width = 2.0 * s->radius;
  q.nodes = interval_rule_.nodes;
  q.weights = interval_rule_.weights;
  for (double& w : q.weights) w /= width;
  return q;
}

double VelocityMeasure::density(std::span<const double> v) const {
  return std::visit(
      Overloaded{
          [&](const UniformBallSpec& s) {
            return norm(v) <= s.radius
                       ? 1.0 / (unit_ball_volume(s.dimension) * std::pow(s.radius, s.dimension))
                       : 0.0;
          },
          [&](const UniformIntervalSpec& s) {
            return v[0] >= s.lower && v[0] <= s.upper ? 1.0 / (s.upper - s.lower) : 0.0;
          },
          [&](const AtomicSpec&) { return 0.0; },
          [&](const TabulatedRadialSpec& s) {
            return RadialTable{s.dimension, s.radii, s.density}(norm(v));
          },
      },
      spec_);
}

double support_value(const VelocityMeasure& m, std::span<const double> p) {
  return std::visit(Overloaded{
                        [&](const UniformBallSpec& s) { return s.radius * norm(p); },
                        [&](const UniformIntervalSpec& s) {
                          return p[0] >= 0.0 ? s.upper * p[0] : s.lower * p[0];
                        },
                        [&](const AtomicSpec& s) {
                          double best = -kInf;
                          for (const Atom& a : s.atoms) best = std::max(best, dot(a.velocity, p));
                          return best;
                        },
                        [&](const TabulatedRadialSpec& s) { return s.radii.back() * norm(p); },
                    },
                    m.spec());
}

SupportQuery support_mu(const VelocityMeasure& m, std::span<const double> p) {
  if (p.size() != static_cast<std::size_t>(m.dimension()))
    fail(ErrorCode::InvalidArgument, "support_mu: momentum dimension mismatch");
  if (!all_finite(p)) fail(ErrorCode::InvalidArgument, "support_mu: momentum must be finite");
  SupportQuery q;
  q.p.assign(p.begin(), p.end());
  if (is_zero(p)) {
    q.mu = 0.0;
    q.shape = ArgmaxShape::Whole;
    return q;
  }
  q.mu = support_value(m, p);
  if (const auto* a = std::get_if<AtomicSpec>(&m.spec())) {
    constexpr double kTie = 1e-12;
    for (const Atom& atom : a->atoms)
      if (dot(atom.velocity, p) >= q.mu - kTie) q.maximizers.push_back(atom.velocity);
    std::sort(q.maximizers.begin(), q.maximizers.end());
    q.maximizers.erase(std::unique(q.maximizers.begin(), q.maximizers.end()), q.maximizers.end());
    q.shape = q.maximizers.size() > 1 ? ArgmaxShape::Face : ArgmaxShape::Point;
    return q;
  }
  if (const auto* s = std::get_if<UniformIntervalSpec>(&m.spec())) {
    q.maximizers.push_back({p[0] > 0.0 ? s->upper : s->lower});
    return q;
  }
  q.maximizers.push_back(scaled(p, m.support_radius() / norm(p)));
  return q;
}

double singular_integral(const VelocityMeasure& m, std::span<const double> p) {
  if (p.size() != static_cast<std::size_t>(m.dimension()))
    fail(ErrorCode::InvalidArgument, "singular_integral: momentum dimension mismatch");
  if (is_zero(p)) fail(ErrorCode::ZeroMomentum, "singular_integral: undefined at p = 0");
  if (const auto* profile = m.radial_profile())
    return profile->singular_constant / (profile->radius * norm(p));
  if (std::holds_alternative<UniformIntervalSpec>(m.spec())) {
    // (1/(b-a)) int dv / (mu - v p) diverges logarithmically at the maximizing
    // endpoint, where the density does not vanish.
    return kInf;
  }
  const auto& atoms = std::get<AtomicSpec>(m.spec()).atoms;
  const double mu = support_value(m, p);
  double total = 0.0;
  for (const Atom& a : atoms) {
    const double d = mu - dot(a.velocity, p);
    if (d <= 0.0) return kInf;
    total += a.weight / d;
  }
  return total;
}

namespace detail {

namespace {

// Integrates w(theta) * kernel(theta) over [0, pi] on panels graded
// geometrically away from theta = 0 at the scale where the denominator
// gap + A (1 - cos theta) changes character.
template <class Kernel>
double graded_radial_integral(const RadialProfile& profile, double scale, Kernel&& kernel) {
  const auto& w = profile.angular_weight;
  const std::function<double(double)> f = [&](double th) { return w(th) * kernel(th); };
  // Magnitude estimate from the fixed rule sets the absolute tolerance.
  double magnitude = 0.0;
  for (std::size_t i = 0; i < profile.weighted_nodes.size(); ++i)
    magnitude += std::abs(profile.weighted_nodes[i] * kernel(profile.theta_rule.nodes[i]));
  const double abs_tol = 1e-15 * magnitude;
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(scale, kPi);
  while (true) {
    const auto r = integrate_adaptive(f, lo, hi, abs_tol, 1e-13, 400);
    total += r.value;
    if (hi >= kPi) break;
    lo = hi;
    hi = std::min(2.0 * hi, kPi);
  }
  return total;
}

double one_minus_cos(double th) {
  const double s = std::sin(0.5 * th);
  return 2.0 * s * s;
}

// Series for (log1p(x) - x/(1+x)) / x^2, accurate for small x.
double log_moment_series(double x) {
  if (std::abs(x) >= 0.1) return (std::log1p(x) - x / (1.0 + x)) / (x * x);
  double sum = 0.0;
  double power = 1.0;
  for (int k = 2; k < 40; ++k) {
    const double term = (k % 2 == 0 ? 1.0 : -1.0) * (k - 1.0) / k * power;
    sum += term;
    power *= x;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double resolvent_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap) {
  if (const auto* profile = m.radial_profile()) {
    const double a = profile->radius * norm(p);
    if (a == 0.0) return 1.0 / gap;
    if (gap >= kNearThreshold * a) {
      double s = 0.0;
      for (std::size_t i = 0; i < profile->weighted_nodes.size(); ++i)
        s += profile->weighted_nodes[i] / (gap + a * profile->half_sin2_nodes[i]);
      return s;
    }
    return graded_radial_integral(*profile, std::sqrt(gap / a),
                                  [&](double th) { return 1.0 / (gap + a * one_minus_cos(th)); });
  }
  if (const auto* s = std::get_if<UniformIntervalSpec>(&m.spec())) {
    // (1/(L|p|)) ln(D(far end) / D(maximizing end)), D(max end) = gap.
    const double x = (s->upper - s->lower) * std::abs(p[0]);
    if (x == 0.0) return 1.0 / gap;
    return std::log1p(x / gap) / x;
  }
  const auto& atoms = std::get<AtomicSpec>(m.spec()).atoms;
  double total = 0.0;
  for (const Atom& a : atoms) total += a.weight / (gap + std::max(0.0, mu - dot(a.velocity, p)));
  return total;
}

double moment0_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap) {
  if (const auto* profile = m.radial_profile()) {
    const double a = profile->radius * norm(p);
    if (a == 0.0) return 1.0 / (gap * gap);
    if (gap >= kNearThreshold * a) {
      double s = 0.0;
      for (std::size_t i = 0; i < profile->weighted_nodes.size(); ++i) {
        const double d = gap + a * profile->half_sin2_nodes[i];
        s += profile->weighted_nodes[i] / (d * d);
      }
      return s;
    }
    return graded_radial_integral(*profile, std::sqrt(gap / a), [&](double th) {
      const double d = gap + a * one_minus_cos(th);
      return 1.0 / (d * d);
    });
  }
  if (const auto* s = std::get_if<UniformIntervalSpec>(&m.spec())) {
    const double x = (s->upper - s->lower) * std::abs(p[0]);
    return 1.0 / (gap * (gap + x));
  }
  const auto& atoms = std::get<AtomicSpec>(m.spec()).atoms;
  double total = 0.0;
  for (const Atom& a : atoms) {
    const double d = gap + std::max(0.0, mu - dot(a.velocity, p));
    total += a.weight / (d * d);
  }
  return total;
}

Vec moment1_gap(const VelocityMeasure& m, std::span<const double> p, double mu, double gap) {
  const auto n = static_cast<std::size_t>(m.dimension());
  Vec out(n, 0.0);
  if (const auto* profile = m.radial_profile()) {
    const double pn = norm(p);
    const double a = profile->radius * pn;
    if (a == 0.0) return out;
    double s = 0.0;
    if (gap >= kNearThreshold * a) {
      for (std::size_t i = 0; i < profile->weighted_nodes.size(); ++i) {
        const double d = gap + a * profile->half_sin2_nodes[i];
        s += profile->weighted_nodes[i] * profile->cos_nodes[i] / (d * d);
      }
    } else {
      s = graded_radial_integral(*profile, std::sqrt(gap / a), [&](double th) {
        const double d = gap + a * one_minus_cos(th);
        return std::cos(th) / (d * d);
      });
    }
    for (std::size_t k = 0; k < n; ++k) out[k] = profile->radius * s * p[k] / pn;
    return out;
  }
  if (const auto* s = std::get_if<UniformIntervalSpec>(&m.spec())) {
    // For p >= 0 with s = b - v: D = gap + p s and
    //   (1/L) int_0^L (b - s) / (gap + p s)^2 ds
    //     = b / (gap (gap + pL)) - (L / gap^2) S(pL / gap).
    // Negative p mirrors the interval.
    const bool mirrored = p[0] < 0.0;
    const double lower = mirrored ? -s->upper : s->lower;
    const double upper = mirrored ? -s->lower : s->upper;
    const double length = upper - lower;
    const double x = length * std::abs(p[0]) / gap;
    const double value =
        upper / (gap * (gap + length * std::abs(p[0]))) - length / (gap * gap) * log_moment_series(x);
    out[0] = mirrored ? -value : value;
    return out;
  }
  const auto& atoms = std::get<AtomicSpec>(m.spec()).atoms;
  for (const Atom& a : atoms) {
    const double d = gap + std::max(0.0, mu - dot(a.velocity, p));
    const double c = a.weight / (d * d);
    for (std::size_t k = 0; k < n; ++k) out[k] += c * a.velocity[k];
  }
  return out;
}

}  // namespace detail

namespace {

double checked_gap(const VelocityMeasure& m, std::span<const double> p, double h, double& mu) {
  if (p.size() != static_cast<std::size_t>(m.dimension()))
    fail(ErrorCode::InvalidArgument, "resolvent: momentum dimension mismatch");
  mu = support_value(m, p);
  const double gap = (1.0 + h) - mu;
  if (!(gap > 0.0))
    fail(ErrorCode::DenominatorNotPositive,
         "resolvent: 1 + h must exceed mu(p) = " + fmt_double(mu) + " (h = " + fmt_double(h) + ")");
  return gap;
}

}  // namespace

double resolvent_integral(const VelocityMeasure& m, std::span<const double> p, double h) {
  double mu = 0.0;
  const double gap = checked_gap(m, p, h, mu);
  return detail::resolvent_gap(m, p, mu, gap);
}

double resolvent_moment0(const VelocityMeasure& m, std::span<const double> p, double h) {
  double mu = 0.0;
  const double gap = checked_gap(m, p, h, mu);
  return detail::moment0_gap(m, p, mu, gap);
}

Vec resolvent_moment1(const VelocityMeasure& m, std::span<const double> p, double h) {
  double mu = 0.0;
  const double gap = checked_gap(m, p, h, mu);
  return detail::moment1_gap(m, p, mu, gap);
}

}  // namespace jumpkit

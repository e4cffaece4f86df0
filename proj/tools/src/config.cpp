#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "jumpkit/errors.hpp"

namespace jumpkit::cli {

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

std::string type_name(const Json& j) { return j.type_name(); }

double as_number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, field + ": expected a number, got " + type_name(j));
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, field + ": must be finite");
  return x;
}

std::vector<std::pair<double, double>> read_table_file(const std::filesystem::path& path,
                                                       const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, field + ": cannot open " + path.string());
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double r = 0.0;
    double g = 0.0;
    if (!(row >> r >> g)) {
      if (rows.empty() && number == 1) continue;  // header line
      throw ConfigError(field, path.string() + ":" + std::to_string(number) +
                                   ": expected 'radius,density'");
    }
    rows.emplace_back(r, g);
  }
  return rows;
}

}  // namespace

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    Json j = Json::parse(text);
    if (!j.is_object()) throw ConfigError("config", "config: top level must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config", "JSON syntax error at line " + std::to_string(line) + ": " +
                                    e.what(),
                      line);
  }
}

ObjectReader::ObjectReader(const Json& value, std::string path)
    : value_(value), path_(std::move(path)) {
  if (!value_.is_object())
    throw ConfigError(path_, path_ + ": expected an object, got " + type_name(value_));
}

bool ObjectReader::has(const std::string& key) const { return value_.contains(key); }

std::string ObjectReader::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const Json& ObjectReader::raw(const std::string& key) {
  if (!has(key)) throw ConfigError(field(key), field(key) + ": required field is missing");
  used_.insert(key);
  return value_.at(key);
}

ObjectReader ObjectReader::object(const std::string& key) {
  return ObjectReader(raw(key), field(key));
}

double ObjectReader::number(const std::string& key) { return as_number(raw(key), field(key)); }

double ObjectReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : fallback;
}

double ObjectReader::positive(const std::string& key) {
  const double x = number(key);
  if (!(x > 0.0)) throw ConfigError(field(key), field(key) + ": must be positive");
  return x;
}

double ObjectReader::positive(const std::string& key, double fallback) {
  return has(key) ? positive(key) : fallback;
}

std::int64_t ObjectReader::integer(const std::string& key, std::int64_t lo, std::int64_t hi) {
  const Json& j = raw(key);
  if (!j.is_number_integer())
    throw ConfigError(field(key), field(key) + ": expected an integer, got " + type_name(j));
  const auto x = j.get<std::int64_t>();
  if (x < lo || x > hi)
    throw ConfigError(field(key), field(key) + ": must lie in [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
  return x;
}

std::int64_t ObjectReader::integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                                   std::int64_t hi) {
  return has(key) ? integer(key, lo, hi) : fallback;
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& j = raw(key);
  if (!j.is_boolean())
    throw ConfigError(field(key), field(key) + ": expected a boolean, got " + type_name(j));
  return j.get<bool>();
}

std::string ObjectReader::string(const std::string& key) {
  const Json& j = raw(key);
  if (!j.is_string())
    throw ConfigError(field(key), field(key) + ": expected a string, got " + type_name(j));
  return j.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

Vec ObjectReader::vector(const std::string& key) {
  const Json& j = raw(key);
  if (j.is_number()) return {as_number(j, field(key))};
  if (!j.is_array() || j.empty())
    throw ConfigError(field(key), field(key) + ": expected a number or a nonempty array");
  Vec out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(as_number(j[k], field(key) + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<double> ObjectReader::numbers(const std::string& key) {
  const Json& j = raw(key);
  if (!j.is_array()) throw ConfigError(field(key), field(key) + ": expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(as_number(j[k], field(key) + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<Vec> ObjectReader::vectors(const std::string& key) {
  const Json& j = raw(key);
  if (!j.is_array()) throw ConfigError(field(key), field(key) + ": expected an array");
  std::vector<Vec> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string f = field(key) + "[" + std::to_string(k) + "]";
    if (j[k].is_number()) {
      out.push_back({as_number(j[k], f)});
      continue;
    }
    if (!j[k].is_array() || j[k].empty())
      throw ConfigError(f, f + ": expected a number or a nonempty array");
    Vec v;
    for (std::size_t i = 0; i < j[k].size(); ++i)
      v.push_back(as_number(j[k][i], f + "[" + std::to_string(i) + "]"));
    out.push_back(std::move(v));
  }
  return out;
}

void ObjectReader::finish() const {
  for (const auto& [key, _] : value_.items())
    if (!used_.count(key)) throw ConfigError(field(key), field(key) + ": unknown field");
}

VelocityMeasure parse_measure(ObjectReader r) {
  const std::string kind = r.string("kind");
  const auto order = static_cast<int>(r.integer("quadrature_order", kDefaultQuadratureOrder, 2,
                                                100000));
  const auto build = [&](auto&& make) {
    try {
      return make();
    } catch (const Error& e) {
      throw ConfigError(r.path(), r.path() + ": " + e.what());
    }
  };
  if (kind == "uniform_ball") {
    const auto n = static_cast<int>(r.integer("dimension", 1, 64));
    const double radius = r.positive("radius", 1.0);
    r.finish();
    return build([&] { return VelocityMeasure::uniform_ball(n, radius, order); });
  }
  if (kind == "uniform_interval") {
    const double lower = r.number("lower");
    const double upper = r.number("upper");
    r.finish();
    return build([&] { return VelocityMeasure::uniform_interval(lower, upper, order); });
  }
  if (kind == "atomic") {
    const Json& list = r.raw("atoms");
    if (!list.is_array() || list.empty())
      throw ConfigError(r.field("atoms"), r.field("atoms") + ": expected a nonempty array");
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < list.size(); ++k) {
      ObjectReader a(list[k], r.field("atoms") + "[" + std::to_string(k) + "]");
      Atom atom;
      atom.velocity = a.vector("velocity");
      atom.weight = a.positive("weight");
      a.finish();
      atoms.push_back(std::move(atom));
    }
    const bool degenerate = r.boolean("allow_degenerate_hull", false);
    r.finish();
    return build([&] { return VelocityMeasure::atomic(atoms, degenerate); });
  }
  if (kind == "tabulated_radial") {
    const auto n = static_cast<int>(r.integer("dimension", 1, 64));
    std::vector<double> radii;
    std::vector<double> density;
    if (r.has("table_file")) {
      if (r.has("radii") || r.has("density"))
        throw ConfigError(r.field("table_file"),
                          r.field("table_file") + ": give either table_file or radii/density");
      for (const auto& [s, g] : read_table_file(r.string("table_file"), r.field("table_file"))) {
        radii.push_back(s);
        density.push_back(g);
      }
    } else {
      radii = r.numbers("radii");
      density = r.numbers("density");
    }
    r.finish();
    return build([&] { return VelocityMeasure::tabulated_radial(n, radii, density, order); });
  }
  throw ConfigError(r.field("kind"), r.field("kind") + ": unknown measure kind '" + kind +
                                         "' (uniform_ball, uniform_interval, atomic, "
                                         "tabulated_radial)");
}

SolverTolerances parse_tolerances(ObjectReader r) {
  SolverTolerances t;
  t.residual = r.positive("residual", t.residual);
  t.max_iterations = static_cast<int>(r.integer("max_iterations", t.max_iterations, 1, 100000));
  t.initial_offset_scale = r.positive("initial_offset_scale", t.initial_offset_scale);
  t.min_offset = r.positive("min_offset", t.min_offset);
  t.max_doublings = static_cast<int>(r.integer("max_doublings", t.max_doublings, 1, 1000));
  r.finish();
  return t;
}

LegendreOptions parse_legendre_options(ObjectReader r) {
  LegendreOptions o;
  o.p_cap = r.positive("p_cap", o.p_cap);
  o.x_tol = r.positive("x_tol", o.x_tol);
  o.stagnation = r.positive("stagnation", o.stagnation);
  o.max_sweeps = static_cast<int>(r.integer("max_sweeps", o.max_sweeps, 1, 1000000));
  r.finish();
  return o;
}

PotentialSpec parse_potential(ObjectReader r, int dimension) {
  const std::string type = r.string("type");
  const auto check_dim = [&](const Vec& v, const std::string& key) {
    if (v.size() != static_cast<std::size_t>(dimension))
      throw ConfigError(r.field(key), r.field(key) + ": expected " + std::to_string(dimension) +
                                          " components");
  };
  PotentialSpec out;
  out.dimension = dimension;
  if (type == "constant") {
    const double c = r.number("value");
    r.finish();
    out.function = [c](std::span<const double>) { return c; };
    return out;
  }
  if (type == "linear") {
    const Vec slope = r.vector("slope");
    check_dim(slope, "slope");
    const double offset = r.number("offset", 0.0);
    r.finish();
    out.function = [slope, offset](std::span<const double> x) { return offset + dot(slope, x); };
    return out;
  }
  if (type == "cone") {
    // offset + sign * min(cap, slope * min_c |x - c|)
    std::vector<Vec> centers =
        r.has("centers") ? r.vectors("centers") : std::vector<Vec>{Vec(dimension, 0.0)};
    if (centers.empty())
      throw ConfigError(r.field("centers"), r.field("centers") + ": need at least one center");
    for (const Vec& c : centers) check_dim(c, "centers");
    const double slope = r.positive("slope", 1.0);
    const double cap = r.positive("cap", std::numeric_limits<double>::infinity());
    const double offset = r.number("offset", 0.0);
    const double sign = r.boolean("negate", false) ? -1.0 : 1.0;
    r.finish();
    out.function = [=](std::span<const double> x) {
      double d = std::numeric_limits<double>::infinity();
      for (const Vec& c : centers) {
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) s += (x[k] - c[k]) * (x[k] - c[k]);
        d = std::min(d, std::sqrt(s));
      }
      return offset + sign * std::min(cap, slope * d);
    };
    return out;
  }
  throw ConfigError(r.field("type"), r.field("type") + ": unknown potential type '" + type +
                                         "' (constant, linear, cone)");
}

std::vector<double> GridSpec::axis(std::size_t k, bool include_upper) const {
  const double step = (upper[k] - lower[k]) / static_cast<double>(cells[k]);
  return uniform_axis(lower[k], step, static_cast<std::size_t>(cells[k]) + (include_upper ? 1 : 0));
}

GridSpec parse_grid(ObjectReader r) {
  GridSpec g;
  g.lower = r.vector("lower");
  g.upper = r.vector("upper");
  const Json& cells = r.raw("cells");
  const auto read_cells = [&](const Json& j, const std::string& f) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 2 || j.get<std::int64_t>() > 100000000)
      throw ConfigError(f, f + ": expected an integer in [2, 1e8]");
    return j.get<std::int64_t>();
  };
  if (cells.is_array()) {
    for (std::size_t k = 0; k < cells.size(); ++k)
      g.cells.push_back(read_cells(cells[k], r.field("cells") + "[" + std::to_string(k) + "]"));
  } else {
    g.cells.push_back(read_cells(cells, r.field("cells")));
  }
  r.finish();
  if (g.lower.size() != g.upper.size() || g.lower.size() != g.cells.size() || g.lower.size() > 2)
    throw ConfigError(r.path(), r.path() + ": lower, upper and cells need 1 or 2 matching entries");
  for (std::size_t k = 0; k < g.lower.size(); ++k)
    if (!(g.upper[k] > g.lower[k]))
      throw ConfigError(r.field("upper"), r.field("upper") + ": must exceed lower");
  return g;
}

std::vector<double> parse_times(ObjectReader& r, const std::string& key, double T) {
  if (!r.has(key)) return {T};
  std::vector<double> times = r.numbers(key);
  for (double t : times)
    if (!(t > 0.0 && t <= T))
      throw ConfigError(r.field(key), r.field(key) + ": every time must lie in (0, T]");
  if (times.empty() || times.back() != T) times.push_back(T);
  return times;
}

}  // namespace jumpkit::cli

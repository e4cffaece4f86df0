#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "jumpkit/errors.hpp"
#include "jumpkit/grid_field.hpp"
#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/hj_solver.hpp"
#include "jumpkit/kinetic_solver.hpp"
#include "jumpkit/parallel.hpp"
#include "jumpkit/pdmp.hpp"

namespace jumpkit::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::set<std::string> kTopLevelKeys{
    "measure",     "threads", "tolerances",    "legendre_options", "hamiltonian",
    "sing_boundary", "eigen", "legendre",      "hj_solve",         "kinetic_solve",
    "converge",    "simulate"};

// Shared context: the measure, tolerances and the command's own section.
struct Context {
  const GlobalOptions& options;
  ObjectReader root;
  VelocityMeasure measure;
  SolverTolerances tolerances;
  LegendreOptions legendre_options;
  int threads = 0;
  CommandResult result;

  fs::path file(const std::string& name) {
    fs::create_directories(options.out);
    fs::path path = options.out / name;
    result.files.push_back(path);
    return path;
  }
};

Context make_context(const Json& config, const GlobalOptions& options) {
  for (const auto& [key, _] : config.items())
    if (!kTopLevelKeys.count(key)) throw ConfigError(key, key + ": unknown field");
  ObjectReader root(config, "");
  VelocityMeasure measure = parse_measure(root.object("measure"));
  Context ctx{options, root, measure, {}, {}, 0, {}};
  ctx.threads = options.threads ? *options.threads
                                : static_cast<int>(ctx.root.integer("threads", 0, 0, 4096));
  if (ctx.root.has("tolerances")) ctx.tolerances = parse_tolerances(ctx.root.object("tolerances"));
  if (ctx.root.has("legendre_options"))
    ctx.legendre_options = parse_legendre_options(ctx.root.object("legendre_options"));
  return ctx;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json vec_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

// JSON has no infinity; a null value stands for it.
Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string header_list(const std::string& prefix, int n) {
  std::string out;
  for (int k = 0; k < n; ++k) out += (k ? "," : "") + prefix + "_" + std::to_string(k);
  return out;
}

std::string row_list(std::span<const double> v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_number(v[k]);
  return out;
}

void check_dimension(const Vec& v, const VelocityMeasure& m, const std::string& field) {
  if (v.size() != static_cast<std::size_t>(m.dimension()))
    throw ConfigError(field, field + ": expected " + std::to_string(m.dimension()) +
                                 " components");
}

// Rethrows a library error with the offending point attached.
template <class F>
auto at_point(std::span<const double> p, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (at p = " + format_vec(p) + ")");
  }
}

std::vector<Vec> momentum_grid(ObjectReader r, const VelocityMeasure& m) {
  std::vector<Vec> points;
  if (r.has("points")) {
    points = r.vectors("points");
    for (std::size_t k = 0; k < points.size(); ++k)
      check_dimension(points[k], m, r.field("points") + "[" + std::to_string(k) + "]");
  }
  if (r.has("ray")) {
    ObjectReader ray = r.object("ray");
    Vec dir = ray.has("direction") ? ray.vector("direction") : Vec(m.dimension(), 0.0);
    if (!ray.has("direction")) dir[0] = 1.0;
    check_dimension(dir, m, ray.field("direction"));
    const double len = norm(dir);
    if (!(len > 0.0)) throw ConfigError(ray.field("direction"), "direction must be nonzero");
    const double start = ray.number("start", 0.0);
    const double stop = ray.number("stop");
    const auto count = ray.integer("count", 0, 10000000);
    ray.finish();
    if (start < 0.0 || stop < start)
      throw ConfigError(ray.path(), ray.path() + ": need 0 <= start <= stop");
    for (std::int64_t k = 0; k < count; ++k) {
      const double rho = count == 1 ? start
                                    : start + (stop - start) * static_cast<double>(k) /
                                                  static_cast<double>(count - 1);
      points.push_back(scaled(dir, rho / len));
    }
  }
  r.finish();
  return points;
}

void cmd_hamiltonian(Context& ctx) {
  const std::vector<Vec> points = momentum_grid(ctx.root.object("hamiltonian"), ctx.measure);
  const int n = ctx.measure.dimension();
  std::vector<HamiltonianEval> evals(points.size());
  parallel_for(points.size(), ctx.threads, [&](std::size_t k) {
    evals[k] = at_point(points[k], [&] { return solve_H(ctx.measure, points[k], ctx.tolerances); });
  });
  std::ostringstream csv;
  csv << "# schema: jumpkit.hamiltonian/1\n"
      << "abs_p," << header_list("p", n) << ",H,mu_minus_1,regime," << header_list("grad", n)
      << ",residual\n";
  for (const auto& e : evals) {
    csv << format_number(norm(e.p)) << ',' << row_list(e.p) << ',' << format_number(e.H) << ','
        << format_number(e.mu - 1.0) << ',' << to_string(e.regime) << ',' << row_list(e.grad)
        << ',' << format_number(e.residual) << '\n';
  }
  write_text(ctx.file("hamiltonian.csv"), csv.str());
}

void cmd_sing_boundary(Context& ctx) {
  ObjectReader r = ctx.root.object("sing_boundary");
  std::vector<Vec> directions;
  if (r.has("direction")) directions.push_back(r.vector("direction"));
  if (r.has("directions")) {
    const auto more = r.vectors("directions");
    directions.insert(directions.end(), more.begin(), more.end());
  }
  const double tolerance = r.positive("tolerance", 1e-10);
  r.finish();
  if (directions.empty())
    throw ConfigError(r.path(), r.path() + ": give direction or directions");
  Json results = Json::array();
  for (Vec& d : directions) {
    check_dimension(d, ctx.measure, r.field("direction"));
    const double len = norm(d);
    if (!(len > 0.0)) throw ConfigError(r.field("direction"), "direction must be nonzero");
    for (double& x : d) x /= len;
    const double radius =
        at_point(d, [&] { return sing_boundary_radius(ctx.measure, d, tolerance); });
    results.push_back(
        {{"direction", vec_json(d)}, {"radius", number_or_null(radius)}, {"infinite", std::isinf(radius)}});
  }
  write_json(ctx.file("sing_boundary.json"), {{"schema", "jumpkit.sing_boundary/1"},
                                              {"measure", ctx.measure.fingerprint()},
                                              {"results", results}});
}

void cmd_eigen(Context& ctx) {
  ObjectReader r = ctx.root.object("eigen");
  const std::vector<Vec> points = r.vectors("points");
  r.finish();
  Json records = Json::array();
  for (std::size_t k = 0; k < points.size(); ++k) {
    check_dimension(points[k], ctx.measure, r.field("points"));
    const EigenPair e =
        at_point(points[k], [&] { return eigenpair(ctx.measure, points[k], ctx.tolerances); });
    records.push_back({{"p", vec_json(e.p)},
                       {"H", e.H},
                       {"mu", e.mu},
                       {"regime", std::string(to_string(e.regime))},
                       {"density_scale", e.density_scale},
                       {"atom_weight", e.atom_weight},
                       {"atom_location", e.atom_location ? vec_json(*e.atom_location)
                                                         : Json(nullptr)}});
  }
  write_json(ctx.file("eigen.json"), {{"schema", "jumpkit.eigen/1"},
                                      {"measure", ctx.measure.fingerprint()},
                                      {"records", records}});
}

void cmd_legendre(Context& ctx) {
  ObjectReader r = ctx.root.object("legendre");
  const std::vector<Vec> points = r.vectors("points");
  r.finish();
  const int n = ctx.measure.dimension();
  for (const Vec& v : points) check_dimension(v, ctx.measure, r.field("points"));
  std::vector<std::string> rows(points.size());
  parallel_for(points.size(), ctx.threads, [&](std::size_t k) {
    const Vec& v = points[k];
    std::ostringstream row;
    row << row_list(v) << ',';
    try {
      const LegendreEval e = legendre(ctx.measure, v, ctx.legendre_options);
      row << format_number(e.L + 0.0) << ',' << row_list(e.argmax_p) << ','
          << (e.boundary ? "boundary" : "interior") << ',' << e.evaluations;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutsideHull) throw;
      row << "inf," << row_list(Vec(n, kInf)) << ",outside,0";
    }
    rows[k] = row.str();
  });
  std::ostringstream csv;
  csv << "# schema: jumpkit.legendre/1\n"
      << header_list("v", n) << ",L," << header_list("argmax_p", n) << ",status,evaluations\n";
  for (const auto& row : rows) csv << row << '\n';
  write_text(ctx.file("legendre.csv"), csv.str());
}

void write_field(Context& ctx, const GridField& field, const std::string& stem,
                 const std::string& y_name = "y") {
  std::ostringstream csv;
  write_csv(field, csv, y_name);
  write_text(ctx.file(stem + ".csv"), csv.str());
  std::ofstream bin(ctx.file(stem + ".gfld"), std::ios::binary);
  write_binary(field, bin);
}

struct FieldSetup {
  PotentialSpec phi0;
  GridSpec grid;
  double T = 0.0;
  std::vector<double> times;
  double cfl = 0.5;
};

FieldSetup read_field_setup(ObjectReader& r, const VelocityMeasure& m) {
  FieldSetup s;
  s.phi0 = parse_potential(r.object("initial"), m.dimension());
  s.grid = parse_grid(r.object("grid"));
  if (s.grid.lower.size() != static_cast<std::size_t>(m.dimension()))
    throw ConfigError(r.field("grid"), r.field("grid") + ": grid and measure dimensions differ");
  s.T = r.positive("T");
  s.times = parse_times(r, "output_times", s.T);
  s.cfl = r.positive("cfl", 0.5);
  if (s.cfl > 1.0) throw ConfigError(r.field("cfl"), r.field("cfl") + ": must lie in (0, 1]");
  return s;
}

void cmd_hj_solve(Context& ctx) {
  ObjectReader r = ctx.root.object("hj_solve");
  FieldSetup s = read_field_setup(r, ctx.measure);
  const std::string method = r.string("method", "both");
  const std::string boundary = r.string("boundary", "extrapolate");
  const double dt = r.number("dt", 0.0);
  HopfLaxOptions hl;
  if (r.has("hopf_lax")) {
    ObjectReader h = r.object("hopf_lax");
    hl.lattice_step = h.positive("lattice_step", hl.lattice_step);
    hl.refine_points = static_cast<int>(h.integer("refine_points", hl.refine_points, 3, 100001));
    hl.polish_tol = h.positive("polish_tol", hl.polish_tol);
    h.finish();
  }
  r.finish();
  if (method != "both" && method != "hopf_lax" && method != "lax_friedrichs")
    throw ConfigError(r.field("method"), r.field("method") +
                                             ": expected hopf_lax, lax_friedrichs or both");
  if (boundary != "periodic" && boundary != "extrapolate")
    throw ConfigError(r.field("boundary"), r.field("boundary") + ": expected periodic or extrapolate");
  if (dt < 0.0) throw ConfigError(r.field("dt"), r.field("dt") + ": must be nonnegative");
  const bool is_periodic = boundary == "periodic";
  hl.threads = ctx.threads;

  Potential phi0 = s.phi0.function;
  if (is_periodic) {
    for (std::size_t k = 1; k < s.grid.lower.size(); ++k)
      if (s.grid.lower[k] != s.grid.lower[0] || s.grid.upper[k] != s.grid.upper[0])
        throw ConfigError(r.field("grid"), "periodic 2-D grids must share one interval per axis");
    phi0 = periodic(phi0, s.grid.lower[0], s.grid.upper[0] - s.grid.lower[0]);
  }
  GridField initial;
  initial.times = {0.0};
  initial.x = s.grid.axis(0, !is_periodic);
  if (s.grid.lower.size() == 2) initial.y = s.grid.axis(1, !is_periodic);
  for (double x : initial.x) {
    if (initial.y.empty()) {
      initial.values.push_back(phi0(std::span<const double>(&x, 1)));
    } else {
      for (double y : initial.y) {
        const std::array<double, 2> pt{x, y};
        initial.values.push_back(phi0(pt));
      }
    }
  }
  std::vector<double> all_times{0.0};
  all_times.insert(all_times.end(), s.times.begin(), s.times.end());

  Json summary{{"schema", "jumpkit.hj_solve/1"},
               {"measure", ctx.measure.fingerprint()},
               {"method", method},
               {"boundary", boundary},
               {"T", s.T},
               {"times", all_times}};
  GridField lf;
  GridField ref;
  if (method != "hopf_lax") {
    LaxFriedrichsOptions o;
    o.cfl = s.cfl;
    o.dt = dt;
    o.boundary = is_periodic ? BoundaryCondition::Periodic : BoundaryCondition::Extrapolate;
    o.output_times = s.times;
    o.threads = ctx.threads;
    o.tolerances = ctx.tolerances;
    lf = lax_friedrichs_solve(ctx.measure, initial, s.T, o);
    write_field(ctx, lf, "hj_lax_friedrichs");
  }
  if (method != "lax_friedrichs") {
    ref = HopfLax(ctx.measure, hl).solve(phi0, all_times, initial.x, initial.y);
    write_field(ctx, ref, "hj_hopf_lax");
  }
  if (method == "both") summary["sup_distance"] = sup_distance(lf.values, ref.values);
  write_json(ctx.file("hj_summary.json"), summary);
}

PeriodicGrid periodic_grid(const FieldSetup& s, ObjectReader& r) {
  if (s.grid.lower.size() != 1)
    throw ConfigError(r.field("grid"), r.field("grid") + ": kinetic runs are 1-D");
  PeriodicGrid g;
  g.lower = s.grid.lower[0];
  g.length = s.grid.upper[0] - s.grid.lower[0];
  g.cells = static_cast<std::size_t>(s.grid.cells[0]);
  return g;
}

void cmd_kinetic_solve(Context& ctx) {
  ObjectReader r = ctx.root.object("kinetic_solve");
  FieldSetup s = read_field_setup(r, ctx.measure);
  const double eps = r.positive("eps");
  const bool linear_check = r.boolean("linear_check", false);
  KineticOptions o;
  o.bound_tolerance = r.positive("bound_tolerance", o.bound_tolerance);
  const PeriodicGrid grid = periodic_grid(s, r);
  r.finish();
  o.cfl = s.cfl;
  o.output_times = s.times;
  o.threads = ctx.threads;

  const GridField initial = grid.sample(periodic(s.phi0.function, grid.lower, grid.length));
  const KineticField k = kinetic_solve(ctx.measure, initial, eps, s.T, o);
  write_field(ctx, k.field, "kinetic_field", "v");
  double spread = 0.0;
  for (std::size_t t = 0; t < k.field.nt(); ++t)
    for (std::size_t i = 0; i < k.field.nx(); ++i) {
      double lo = kInf;
      double hi = -kInf;
      for (std::size_t j = 0; j < k.field.ny(); ++j) {
        lo = std::min(lo, k.field.at(t, i, j));
        hi = std::max(hi, k.field.at(t, i, j));
      }
      spread = std::max(spread, hi - lo);
    }
  Json summary{{"schema", "jumpkit.kinetic_solve/1"},
               {"measure", ctx.measure.fingerprint()},
               {"eps", eps},
               {"T", s.T},
               {"times", k.field.times},
               {"dx", grid.dx()},
               {"dt", k.dt},
               {"steps", k.steps},
               {"velocity_nodes", k.field.ny()},
               {"lipschitz0", k.lipschitz0},
               {"bounds", {k.lower_bound, k.upper_bound}},
               {"v_spread", spread}};
  if (linear_check) {
    const LinearFResult f = linear_f_solve(ctx.measure, initial, eps, s.T, o);
    summary["linear"] = {{"sup_distance", sup_distance(k.field.values, f.potential.values)},
                         {"max_mass_step_drift", f.max_mass_step_drift}};
  }
  write_json(ctx.file("kinetic_summary.json"), summary);
}

void cmd_converge(Context& ctx) {
  ObjectReader r = ctx.root.object("converge");
  FieldSetup s = read_field_setup(r, ctx.measure);
  const std::vector<double> eps = r.numbers("eps");
  KineticOptions o;
  o.bound_tolerance = r.positive("bound_tolerance", o.bound_tolerance);
  const PeriodicGrid grid = periodic_grid(s, r);
  r.finish();
  if (eps.empty()) throw ConfigError(r.field("eps"), r.field("eps") + ": need at least one value");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0.0)) throw ConfigError(r.field("eps"), r.field("eps") + ": must be positive");
    if (k > 0 && !(eps[k] < eps[k - 1]))
      throw ConfigError(r.field("eps"), r.field("eps") + ": must be strictly decreasing");
  }
  o.cfl = s.cfl;
  o.output_times = s.times;
  o.threads = ctx.threads;
  const ConvergenceReport report = convergence_report(ctx.measure, s.phi0.function, eps, s.T, grid, o);
  std::ostringstream csv;
  csv << "# schema: jumpkit.convergence/1\neps,sup_error,v_spread,dt,steps\n";
  for (const auto& row : report.rows)
    csv << format_number(row.eps) << ',' << format_number(row.sup_error) << ','
        << format_number(row.v_spread) << ',' << format_number(row.dt) << ',' << row.steps << '\n';
  write_text(ctx.file("convergence.csv"), csv.str());
  write_text(ctx.file("convergence_manifest.txt"),
             "# schema: jumpkit.manifest/1\n" + report.manifest +
                 "errors_decreasing: " + (report.errors_decreasing() ? "true" : "false") +
                 "\nspread_decreasing: " + (report.spread_decreasing() ? "true" : "false") + "\n");
}

void cmd_simulate(Context& ctx) {
  ObjectReader r = ctx.root.object("simulate");
  const auto count = static_cast<std::size_t>(r.integer("count", 1, 100000000));
  const double T = r.positive("T");
  const auto seed_cfg = r.integer("seed", 0, 0, std::numeric_limits<std::int64_t>::max());
  const std::uint64_t seed = ctx.options.seed ? *ctx.options.seed : static_cast<std::uint64_t>(seed_cfg);
  SampleOptions so;
  so.record_paths = static_cast<std::size_t>(
      r.integer("record_paths", 0, 0, static_cast<std::int64_t>(kMaxRecordedPaths)));
  so.threads = ctx.threads;
  std::optional<std::tuple<double, double, std::size_t>> hist;
  if (r.has("histogram")) {
    ObjectReader h = r.object("histogram");
    const double lo = h.number("lower");
    const double hi = h.number("upper");
    const auto bins = static_cast<std::size_t>(h.integer("bins", 1, 1000000));
    h.finish();
    if (!(hi > lo)) throw ConfigError(h.field("upper"), h.field("upper") + ": must exceed lower");
    if (ctx.measure.dimension() != 1)
      throw ConfigError(h.path(), h.path() + ": histograms need a 1-D measure");
    hist = std::make_tuple(lo, hi, bins);
  }
  r.finish();

  const TrajectoryBatch batch = sample_paths(ctx.measure, count, T, seed, so);
  const MomentReport rep = empirical_moment_check(batch, ctx.measure);
  double jumps = 0.0;
  for (auto j : batch.jump_counts) jumps += j;
  write_json(ctx.file("simulate_summary.json"),
             {{"schema", "jumpkit.simulate/1"},
              {"measure", ctx.measure.fingerprint()},
              {"seed", seed},
              {"count", count},
              {"T", T},
              {"mean_gap", batch.mean_gap()},
              {"min_gap", batch.min_gap},
              {"max_speed", batch.max_speed},
              {"mean_jumps", jumps / static_cast<double>(count)},
              {"drift", rep.drift},
              {"standard_error", rep.standard_error},
              {"expected_drift", rep.expected},
              {"z_score", rep.z_score},
              {"covariance_rate", rep.covariance_rate},
              {"sigmas", rep.sigmas},
              {"pass", rep.pass}});

  const int n = ctx.measure.dimension();
  if (!batch.paths.empty()) {
    std::ostringstream csv;
    csv << "# schema: jumpkit.paths/1\npath,segment,t_start,t_end," << header_list("v", n) << '\n';
    for (std::size_t p = 0; p < batch.paths.size(); ++p) {
      const PathRecord& rec = batch.paths[p];
      for (std::size_t s = 0; s < rec.velocities.size(); ++s) {
        const double t0 = s == 0 ? 0.0 : rec.jump_times[s - 1];
        const double t1 = s < rec.jump_times.size() ? rec.jump_times[s] : T;
        csv << p << ',' << s << ',' << format_number(t0) << ',' << format_number(t1) << ','
            << row_list(rec.velocities[s]) << '\n';
      }
    }
    write_text(ctx.file("paths.csv"), csv.str());
  }
  if (hist) {
    const auto [lo, hi, bins] = *hist;
    const auto counts = drift_histogram(batch, lo, hi, bins);
    const double width = (hi - lo) / static_cast<double>(bins);
    std::ostringstream csv;
    csv << "# schema: jumpkit.drift_histogram/1\nbin_lower,bin_upper,count,empirical_rate,L\n";
    for (std::size_t b = 0; b < bins; ++b) {
      const double a = lo + width * static_cast<double>(b);
      const double centre = a + 0.5 * width;
      const double density = static_cast<double>(counts[b]) / (static_cast<double>(count) * width);
      const double rate = counts[b] ? -std::log(density) / T : kInf;
      double L = kInf;
      try {
        L = legendre(ctx.measure, std::span<const double>(&centre, 1), ctx.legendre_options).L;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutsideHull) throw;
      }
      csv << format_number(a) << ',' << format_number(a + width) << ',' << counts[b] << ','
          << format_number(rate) << ',' << format_number(L) << '\n';
    }
    write_text(ctx.file("drift_histogram.csv"), csv.str());
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"hamiltonian", "sing-boundary", "eigen",
                                              "legendre",    "hj-solve",      "kinetic-solve",
                                              "converge",    "simulate"};
  return names;
}

CommandResult run_command(const std::string& name, const Json& config,
                          const GlobalOptions& options) {
  using Handler = void (*)(Context&);
  static const std::map<std::string, std::pair<std::string, Handler>> handlers{
      {"hamiltonian", {"hamiltonian", cmd_hamiltonian}},
      {"sing-boundary", {"sing_boundary", cmd_sing_boundary}},
      {"eigen", {"eigen", cmd_eigen}},
      {"legendre", {"legendre", cmd_legendre}},
      {"hj-solve", {"hj_solve", cmd_hj_solve}},
      {"kinetic-solve", {"kinetic_solve", cmd_kinetic_solve}},
      {"converge", {"converge", cmd_converge}},
      {"simulate", {"simulate", cmd_simulate}},
  };
  const auto it = handlers.find(name);
  if (it == handlers.end()) throw ConfigError("command", "unknown command '" + name + "'");
  if (!config.is_object()) throw ConfigError("config", "config: top level must be a JSON object");
  if (!config.contains(it->second.first))
    throw ConfigError(it->second.first, it->second.first + ": required section is missing");
  Context ctx = make_context(config, options);
  it->second.second(ctx);
  return std::move(ctx.result);
}

}  // namespace jumpkit::cli

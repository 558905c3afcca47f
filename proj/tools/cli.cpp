#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semicl/egorov.hpp"
#include "semicl/errors.hpp"
#include "semicl/geometry.hpp"
#include "semicl/parallel.hpp"
#include "semicl/scenario.hpp"
#include "semicl/schrodinger.hpp"
#include "semicl/wigner.hpp"

namespace semicl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Largest Wigner grid (values) the tool will allocate.
constexpr double kMaxWignerValues = 1.5e8;

struct Globals {
  std::string scenario;
  std::string out = ".";
  int threads = 1;
  std::uint64_t seed = 0;
  int verbosity = 0;
};

struct Context {
  const Globals& g;
  Scenario sc;
  std::ostream& out;
  std::ostream& err;

  void log(int level, const std::string& msg) const {
    if (g.verbosity >= level) err << msg << "\n";
  }
  fs::path path(const std::string& name) const { return fs::path(g.out) / name; }
  std::ofstream open(const std::string& name) const {
    std::ofstream f(path(name));
    if (!f) throw Error(ErrorKind::Config, "cannot write '" + path(name).string() + "'");
    f << std::setprecision(15);
    return f;
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

double pick_epsilon(const Scenario& sc, double requested) {
  if (requested > 0.0) return requested;
  if (sc.epsilons.empty()) throw Error(ErrorKind::Config, "scenario has no 'epsilons' and no --epsilon was given");
  return *std::max_element(sc.epsilons.begin(), sc.epsilons.end());
}

// -- bands -----------------------------------------------------------------------

int run_bands(const Context& c) {
  const Scenario& sc = c.sc;
  const PlaneWaveBasis basis = sc.plane_wave_basis();
  if (basis.size() < sc.bands_out) throw Error(ErrorKind::Config, "plane-wave basis smaller than bands_out");
  if (sc.path_points < 2) throw Error(ErrorKind::Config, "path_points must be at least 2");

  // Fractional path: the zone in 1D, Γ-X-M-Γ in 2D.
  std::vector<Vec> corners;
  if (sc.dim == 1) {
    corners = {Vec::Constant(1, -0.5), Vec::Constant(1, 0.5)};
  } else {
    Vec g(2), x(2), m(2);
    g << 0.0, 0.0;
    x << 0.5, 0.0;
    m << 0.5, 0.5;
    corners = {g, x, m, g};
  }
  std::vector<Vec> ks;
  for (std::size_t s = 0; s + 1 < corners.size(); ++s) {
    for (int i = 0; i < sc.path_points; ++i) {
      if (s > 0 && i == 0) continue;
      const double f = static_cast<double>(i) / (sc.path_points - 1);
      ks.push_back(sc.lattice.dual_basis() * (corners[s] + f * (corners[s + 1] - corners[s])));
    }
  }
  std::vector<BlochFiber> fibers(ks.size());
  parallel_for(ks.size(), c.g.threads,
               [&](std::size_t i) { fibers[i] = solve_fiber(ks[i], sc.potential, basis, sc.bands_out); });

  std::ofstream f = c.open("bands.csv");
  f << "s";
  for (int j = 1; j <= sc.dim; ++j) f << ",k" << j;
  for (int n = 1; n <= sc.bands_out; ++n) f << ",E" << n;
  f << "\n";
  double s = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i > 0) s += (ks[i] - ks[i - 1]).norm();
    f << s;
    for (int j = 0; j < sc.dim; ++j) f << "," << ks[i][j];
    for (int n = 1; n <= sc.bands_out; ++n) f << "," << fibers[i].energy(n);
    f << "\n";
  }
  for (int n = 1; n < sc.bands_out; ++n) {
    double gap = INFINITY;
    std::size_t at = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double d = fibers[i].energy(n + 1) - fibers[i].energy(n);
      if (d < gap) {
        gap = d;
        at = i;
      }
    }
    std::ostringstream k;
    for (int j = 0; j < sc.dim; ++j) k << (j ? "," : "") << fmt(ks[at][j]);
    c.out << "gap " << n << "-" << n + 1 << ": " << fmt(gap) << " at k = (" << k.str() << ")\n";
  }
  c.out << "wrote " << c.path("bands.csv").string() << " (" << ks.size() << " k points, basis " << basis.size()
        << ")\n";
  return kExitOk;
}

// -- geometry --------------------------------------------------------------------

int run_geometry(const Context& c, bool gauge_check) {
  const Scenario& sc = c.sc;
  const PlaneWaveBasis basis = sc.plane_wave_basis();
  GeometryOptions options;
  options.threads = c.g.threads;
  const GeometryGrid grid = build_geometry_grid(sc.potential, basis, sc.band, sc.geometry_grid, options);
  {
    std::ofstream f = c.open("geometry.csv");
    write_geometry_csv(f, grid);
  }
  json j{{"scenario", sc.name}, {"band", sc.band}, {"grid", sc.geometry_grid}, {"basis", basis.size()},
         {"min_gap", grid.min_gap}};
  if (grid.plaquettes.empty()) {
    j["chern"] = nullptr;
  } else {
    const ChernResult ch = chern_number(grid.plaquettes);
    j["chern"] = json{{"value", ch.chern}, {"raw", ch.raw}, {"residual", ch.residual}};
    c.out << "band " << sc.band << ": Chern " << ch.chern << " (raw " << fmt(ch.raw) << ")\n";
  }
  if (gauge_check && !grid.plaquettes.empty()) {
    // Recompute the plaquette field with random eigenvector phases.
    const auto ks = brillouin_grid(sc.lattice, sc.geometry_grid);
    std::vector<BlochFiber> fibers(ks.size());
    parallel_for(ks.size(), c.g.threads,
                 [&](std::size_t i) { fibers[i] = solve_fiber(ks[i], sc.potential, basis, sc.band + 1); });
    std::mt19937_64 rng(c.g.seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (auto& fb : fibers) fb.vectors.col(sc.band - 1) *= std::polar(1.0, phase(rng));
    const PlaquetteField f = berry_curvature_plaquette(fibers, sc.lattice, sc.geometry_grid, sc.band,
                                                       plane_wave_wrap(basis));
    double change = 0.0;
    for (std::size_t i = 0; i < f.flux.size(); ++i) {
      change = std::max(change, std::abs(f.flux[i] - grid.plaquettes.flux[i]) / f.plaquette_area);
    }
    j["gauge_check"] = json{{"seed", c.g.seed}, {"max_curvature_change", change}};
    c.out << "gauge check (seed " << c.g.seed << "): max curvature change " << fmt(change) << "\n";
  }
  std::ofstream f = c.open("chern.json");
  f << j.dump(2) << "\n";
  c.out << "min gap " << fmt(grid.min_gap) << "; wrote " << c.path("geometry.csv").string() << " and "
        << c.path("chern.json").string() << "\n";
  return kExitOk;
}

// -- hofstadter ------------------------------------------------------------------

int run_hofstadter(const Context& c) {
  const Scenario& sc = c.sc;
  const auto table = hofstadter_chern_table(sc.hof_p, sc.hof_q, sc.hof_grid);
  json bands = json::array();
  int sum = 0;
  c.out << "flux " << sc.hof_p << "/" << sc.hof_q << ", grid " << sc.hof_grid << "\n";
  for (const auto& b : table) {
    sum += b.chern.chern;
    bands.push_back(json{{"band", b.band},
                         {"chern", b.chern.chern},
                         {"raw", b.chern.raw},
                         {"residual", b.chern.residual},
                         {"e_min", b.e_min},
                         {"e_max", b.e_max}});
    c.out << "band " << b.band << ": Chern " << b.chern.chern << "  [" << fmt(b.e_min) << ", " << fmt(b.e_max)
          << "]\n";
  }
  c.out << "sum " << sum << "\n";
  json j{{"p", sc.hof_p}, {"q", sc.hof_q}, {"grid", sc.hof_grid}, {"bands", bands}, {"chern_sum", sum}};
  std::ofstream f = c.open("hofstadter.json");
  f << j.dump(2) << "\n";
  return kExitOk;
}

// -- flow ------------------------------------------------------------------------

int run_flow(const Context& c) {
  const Scenario& sc = c.sc;
  if (sc.points.empty()) throw Error(ErrorKind::Config, "scenario has no 'point' lines");
  const EgorovExperiment exp(sc, c.g.threads);
  FlowSpec spec;
  spec.epsilon = sc.flow_epsilon;
  spec.order = sc.order;
  spec.dt = sc.trajectory_dt;
  spec.integrator = sc.integrator;
  spec.band = exp.band();
  spec.fields = sc.fields;
  const long steps = static_cast<long>(std::ceil(std::abs(sc.flow_t) / sc.trajectory_dt - 1e-9));
  const int every = static_cast<int>(std::max(1L, steps / 2000));
  int code = kExitOk;
  for (std::size_t i = 0; i < sc.points.size(); ++i) {
    const std::string name = "flow_" + std::to_string(i) + ".csv";
    Trajectory traj;
    try {
      traj = integrate_flow(sc.points[i], sc.flow_t, spec, every);
    } catch (const TruncatedTrajectory& e) {
      c.err << "point " << i << ": " << e.what() << "\n";
      traj = e.partial();
      code = kExitNumerical;
    }
    std::ofstream f = c.open(name);
    write_trajectory_csv(f, traj, spec);
    double drift = 0.0;
    const double h0 = traj.energy.front();
    for (double h : traj.energy) drift = std::max(drift, std::abs(h - h0) / std::max(1.0, std::abs(h0)));
    c.out << "point " << i << ": t = " << fmt(traj.t.back()) << ", H_sc drift " << fmt(drift) << ", wrote "
          << c.path(name).string() << "\n";
  }
  return code;
}

// -- wigner ----------------------------------------------------------------------

void check_wigner_size(const BoxGrid& box, bool full) {
  double cols = 1.0;
  for (int n : box.cells) cols *= full ? static_cast<double>(n) * box.points_per_cell : 2.0 * n;
  if (static_cast<double>(box.size()) * cols > kMaxWignerValues) {
    throw Error(ErrorKind::Config, "Wigner grid of " + fmt(static_cast<double>(box.size()) * cols) +
                                       " values is too large; use a smaller box or a larger epsilon");
  }
}

int run_wigner(const Context& c, double epsilon, bool full) {
  const Scenario& sc = c.sc;
  const double eps = pick_epsilon(sc, epsilon);
  const WaveField psi = initial_state(sc, eps);
  const BoxGrid& box = psi.grid();
  full = full || sc.free;
  if (!sc.free) {
    check_wigner_size(box, false);
    const ReducedWigner ws = wigner_series(psi, c.g.threads);
    std::ofstream f = c.open("wigner_series.csv");
    write_reduced_csv(f, ws);
    double mass = 0.0;
    for (double v : ws.values) mass += v;
    c.out << "series: total mass " << fmt(mass * box.cell_element() * ws.k_element()) << ", wrote "
          << c.path("wigner_series.csv").string() << "\n";
    if (full) {
      check_wigner_size(box, true);
      const WignerGrid w = wigner_transform(psi, c.g.threads);
      const ReducedWigner folded = fold_wigner(w);
      double diff = 0.0;
      for (std::size_t i = 0; i < folded.values.size(); ++i) {
        diff = std::max(diff, std::abs(folded.values[i] - ws.values[i]));
      }
      std::ofstream ff = c.open("wigner_full.csv");
      write_wigner_csv(ff, w);
      std::ofstream fo = c.open("wigner_folded.csv");
      write_reduced_csv(fo, folded);
      c.out << "full: total mass " << fmt(marginals(w).total) << ", L2 " << fmt(l2_norm(w))
            << ", max |fold - series| " << fmt(diff) << "\n";
    }
    return kExitOk;
  }
  check_wigner_size(box, true);
  const WignerGrid w = wigner_transform(psi, c.g.threads);
  std::ofstream f = c.open("wigner_full.csv");
  write_wigner_csv(f, w);
  c.out << "full: total mass " << fmt(marginals(w).total) << ", L2 " << fmt(l2_norm(w)) << ", wrote "
        << c.path("wigner_full.csv").string() << "\n";
  return kExitOk;
}

// -- evolve ----------------------------------------------------------------------

int run_evolve(const Context& c, double epsilon) {
  const Scenario& sc = c.sc;
  const double eps = pick_epsilon(sc, epsilon);
  const OracleSpec spec = oracle_spec(sc, eps);
  WaveField psi = initial_state(sc, eps);
  std::vector<double> times;
  for (double t : sc.snapshot_times) {
    if (t > 0.0 && t < sc.t_final) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.push_back(sc.t_final);

  std::ofstream log = c.open("evolve.csv");
  log << "t,norm,energy,boundary_mass\n";
  const double margin = 5.0 * spec.sigma;
  auto record = [&](double t, std::size_t index) {
    log << t << "," << psi.norm_squared() << "," << energy_expectation(psi, spec) << ","
        << boundary_mass(psi, margin) << "\n";
    const std::string name = "psi_" + std::to_string(index) + ".txt";
    std::ofstream f = c.open(name);
    write_wavefield(f, psi);
    c.log(1, "t = " + fmt(t) + ": wrote " + c.path(name).string());
  };
  record(0.0, 0);
  double t_prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    psi = evolve(psi, times[i] - t_prev, spec);
    t_prev = times[i];
    record(times[i], i + 1);
  }
  c.out << "epsilon " << eps << ", " << psi.grid().size() << " nodes, dt " << fmt(spec.dt()) << ": "
        << times.size() + 1 << " snapshots in " << c.g.out << "\n";
  return kExitOk;
}

// -- egorov / converge -----------------------------------------------------------

int run_egorov(const Context& c, double epsilon, int order, double t) {
  const Scenario& sc = c.sc;
  const double eps = pick_epsilon(sc, epsilon);
  const EgorovExperiment exp(sc, c.g.threads);
  const EgorovResult r = egorov_error(exp, eps, order < 0 ? sc.order : order, t < 0.0 ? sc.t_final : t);
  std::ofstream f = c.open("egorov.json");
  f << result_json(r, sc);
  for (std::size_t a = 0; a < r.names.size(); ++a) {
    c.out << r.names[a] << ": quantum " << fmt(r.quantum[a]) << ", classical " << fmt(r.classical[a]) << ", error "
          << fmt(r.error[a]) << "\n";
  }
  return kExitOk;
}

int run_converge(const Context& c, int order, bool transport) {
  const Scenario& sc = c.sc;
  const EgorovExperiment exp(sc, c.g.threads);
  c.log(1, "convergence study over " + std::to_string(sc.epsilons.size()) + " epsilons");
  const ConvergenceReport rep = convergence_study(exp, order < 0 ? sc.order : order);
  {
    std::ofstream f = c.open("converge.json");
    f << report_json(rep, sc);
  }
  for (const auto& o : rep.observables) {
    c.out << o.name << ": slope " << fmt(o.fit.slope) << ", errors";
    for (double e : o.errors) c.out << " " << fmt(e);
    c.out << (o.monotone ? "" : " [not monotone]") << (o.above_floor ? "" : " [at floor]") << "\n";
  }
  c.log(1, "study took " + fmt(rep.seconds) + " s");
  if (transport) {
    std::vector<TransportDemo> demos;
    for (double eps : rep.epsilons) {
      c.log(1, "transport demo at epsilon = " + fmt(eps));
      demos.push_back(transport_wigner_demo(exp, eps, {sc.t_final}));
    }
    const TransportFit fit = fit_transport(demos);
    std::ofstream f = c.open("transport.json");
    f << transport_json(fit, demos, sc);
    for (std::size_t a = 0; a < fit.names.size(); ++a) {
      c.out << "transport " << fit.names[a] << ": C " << fmt(fit.constant[a])
            << (fit.decreasing[a] ? "" : " [not decreasing]") << "\n";
    }
  }
  for (const auto& flag : rep.flags) c.err << "flag: " << flag << "\n";
  if (rep.inconclusive) {
    c.err << "convergence inconclusive\n";
    return kExitInconclusive;
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bloch-band semiclassics: band geometry, flows, Wigner transport and Egorov checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("-s,--scenario", g.scenario, "scenario file")->required();
  app.add_option("-o,--out", g.out, "output directory")->capture_default_str();
  app.add_option("-j,--threads", g.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", g.seed, "seed for randomized gauge checks")->capture_default_str();
  app.add_flag("-v,--verbose", g.verbosity, "more progress on stderr (repeatable)");

  double epsilon = 0.0;
  int order = -1;
  double time = -1.0;
  bool full = false, gauge = false, transport = false;

  auto* bands = app.add_subcommand("bands", "band energies along a zone path (CSV)");
  auto* geometry = app.add_subcommand("geometry", "curvature, moment and Chern number of the scenario band");
  geometry->add_flag("--gauge-check", gauge, "recompute the curvature with random eigenvector phases");
  auto* hof = app.add_subcommand("hofstadter", "Chern numbers of the Harper bands");
  auto* flow = app.add_subcommand("flow", "semiclassical trajectories of the scenario points (CSV)");
  auto* wigner = app.add_subcommand("wigner", "Wigner function of the initial packet (CSV)");
  wigner->add_option("--epsilon", epsilon, "semiclassical parameter (default: largest scenario epsilon)");
  wigner->add_flag("--full", full, "also write the full transform and its fold");
  auto* evolve_cmd = app.add_subcommand("evolve", "split-step evolution with wave-field snapshots");
  evolve_cmd->add_option("--epsilon", epsilon, "semiclassical parameter (default: largest scenario epsilon)");
  auto* egorov = app.add_subcommand("egorov", "quantum against transported observables at one epsilon (JSON)");
  egorov->add_option("--epsilon", epsilon, "semiclassical parameter (default: largest scenario epsilon)");
  egorov->add_option("--order", order, "flow order 0 or 1 (default: scenario)")->check(CLI::Range(0, 1));
  egorov->add_option("--time", time, "evolution time (default: t_final)");
  auto* converge = app.add_subcommand("converge", "convergence study over the scenario epsilons (JSON)");
  converge->add_option("--order", order, "flow order 0 or 1 (default: scenario)")->check(CLI::Range(0, 1));
  converge->add_flag("--transport", transport, "also run the Wigner transport demo");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + g.out + "': " + ec.message());
    Context c{g, load_scenario(g.scenario), out, err};
    c.log(1, "scenario " + c.sc.name + " from " + c.sc.source);
    if (*bands) return run_bands(c);
    if (*geometry) return run_geometry(c, gauge);
    if (*hof) return run_hofstadter(c);
    if (*flow) return run_flow(c);
    if (*wigner) return run_wigner(c, epsilon, full);
    if (*evolve_cmd) return run_evolve(c, epsilon);
    if (*egorov) return run_egorov(c, epsilon, order, time);
    if (*converge) return run_converge(c, order, transport);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.is_config() ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace semicl

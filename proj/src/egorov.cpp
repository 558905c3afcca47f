#include "semicl/egorov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "semicl/errors.hpp"
#include "semicl/parallel.hpp"

namespace semicl {

using nlohmann::json;

WaveField initial_state(const Scenario& sc, double epsilon) {
  const BoxGrid grid = sc.box_grid(epsilon);
  WaveField psi;
  if (sc.free) {
    const double s = sc.width;
    // With a uniform B the Gaussian is taken in the symmetric gauge around x0
    // and moved to the Landau gauge, so k0 is canonical and κ is uniform.
    const double b = sc.dim == 2 ? sc.uniform_b : 0.0;
    psi = sample_wavefield(grid, [&](const Vec& x) {
      const Vec u = x - sc.x0;
      const double phase = sc.k0.dot(x) / epsilon + (b != 0.0 ? b * u[0] * u[1] / (2.0 * epsilon) : 0.0);
      return std::exp(-u.squaredNorm() / (4.0 * s * s)) * std::polar(1.0, phase);
    });
  } else {
    psi = build_band_wavepacket(grid, sc.potential, sc.plane_wave_basis(), sc.band, sc.k0, sc.x0,
                                epsilon / (2.0 * sc.width));
  }
  psi.normalize();
  return psi;
}

OracleSpec oracle_spec(const Scenario& sc, double epsilon) {
  OracleSpec spec;
  spec.potential = sc.potential;
  spec.fields = sc.fields;
  spec.epsilon = epsilon;
  spec.dt_micro = sc.dt_micro;
  spec.c_stab = sc.c_stab;
  spec.uniform_b = sc.uniform_b;
  spec.sigma = sc.width;
  return spec;
}

EgorovExperiment::EgorovExperiment(Scenario scenario, int threads)
    : scenario_(std::move(scenario)), threads_(std::max(1, threads)) {
  if (scenario_.free) {
    band_ = std::make_shared<FreeBand>(scenario_.dim);
    return;
  }
  GeometryOptions options;
  options.threads = threads_;
  const GeometryGrid grid = build_geometry_grid(scenario_.potential, scenario_.plane_wave_basis(), scenario_.band,
                                                scenario_.geometry_grid, options);
  band_ = std::make_shared<InterpolatedBand>(grid);
}

FlowSpec EgorovExperiment::flow_spec(double epsilon, int order) const {
  FlowSpec spec;
  spec.epsilon = epsilon;
  spec.order = order;
  spec.dt = scenario_.flow_dt;
  spec.integrator = Integrator::RK4;
  spec.band = band_;
  spec.fields = scenario_.fields;
  return spec;
}

namespace {

template <typename Fn>
auto with_context(double epsilon, const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw Error(e.kind(), "epsilon = " + std::to_string(epsilon) + ", stage " + stage + ": " + msg);
  }
}

struct Pairing {
  std::vector<double> values;
  std::size_t trajectories = 0;
};

// Σ over sample nodes of w · a(Φ^t(r, k)) · element, all observables on one
// trajectory per node. `momentum(j)` gives the canonical momentum of column j.
template <typename MomentumFn>
Pairing transported_pairing(const BoxGrid& box, std::size_t columns, const std::vector<double>& values,
                            double element, MomentumFn&& momentum, const std::vector<PeriodicObservable>& observables,
                            const FlowSpec& flow, double t, double skip, int threads) {
  const std::size_t rows = box.size();
  const std::size_t n_obs = observables.size();
  std::vector<double> partial(rows * n_obs, 0.0);
  std::vector<std::size_t> counts(rows, 0);
  parallel_for(rows, threads, [&](std::size_t r) {
    const Vec x = box.position(r);
    for (std::size_t j = 0; j < columns; ++j) {
      const double w = values[r * columns + j];
      if (std::abs(w) * element < skip) continue;
      CanonicalPoint p{x, momentum(j)};
      const CanonicalPoint q = t == 0.0 ? p : canonical_flow(p, t, flow);
      ++counts[r];
      for (std::size_t a = 0; a < n_obs; ++a) partial[r * n_obs + a] += w * observables[a].value(q.r, q.k);
    }
  });
  Pairing out;
  out.values.assign(n_obs, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    out.trajectories += counts[r];
    for (std::size_t a = 0; a < n_obs; ++a) out.values[a] += partial[r * n_obs + a] * element;
  }
  return out;
}

std::vector<double> quantum_pairings(const WaveField& psi, const std::vector<PeriodicObservable>& observables,
                                     int threads) {
  const ReducedWigner w = wigner_series(psi, threads);
  std::vector<double> out;
  for (const PeriodicObservable& a : observables) {
    const double shift = weyl_expectation(psi, a);
    const double grid = pair_reduced(w, a);
    if (std::abs(shift - grid) > 1e-4 * std::max(1.0, std::abs(shift))) {
      throw Error(ErrorKind::Inconsistency, "observable " + a.name() + ": shift form " + std::to_string(shift) +
                                                " against grid form " + std::to_string(grid));
    }
    out.push_back(shift);
  }
  return out;
}

}  // namespace

EgorovResult egorov_error(const EgorovExperiment& experiment, double epsilon, int order, double t) {
  const Scenario& sc = experiment.scenario();
  if (sc.observables.empty()) throw Error(ErrorKind::Config, "scenario defines no observable");
  EgorovResult res;
  res.epsilon = epsilon;
  res.t = t;
  res.order = order;
  for (const auto& a : sc.observables) res.names.push_back(a.name());

  const WaveField psi0 = with_context(epsilon, "preparation", [&] { return experiment.initial_state(epsilon); });
  const BoxGrid& box = psi0.grid();
  res.cells = box.cells;
  res.points_per_cell = box.points_per_cell;
  const OracleSpec oracle = experiment.oracle_spec(epsilon);
  res.dt_micro = oracle.dt();
  res.flow_dt = sc.flow_dt;
  if (!sc.free) {
    res.leakage = with_context(epsilon, "leakage", [&] {
      return band_leakage(psi0, sc.potential, sc.plane_wave_basis(), sc.band);
    });
  }

  const WaveField psit = with_context(epsilon, "evolution", [&] { return evolve(psi0, t, oracle); });
  res.quantum = with_context(epsilon, "pairing", [&] { return quantum_pairings(psit, sc.observables, experiment.threads()); });

  const FlowSpec flow = experiment.flow_spec(epsilon, order);
  const Pairing classical = with_context(epsilon, "transport", [&] {
    if (sc.free) {
      const WignerGrid w = wigner_transform(psi0, experiment.threads());
      return transported_pairing(box, w.p_size(), w.values, box.cell_element() * w.p_element(),
                                 [&](std::size_t j) { return w.momentum(j); }, sc.observables, flow, t,
                                 sc.wigner_skip, experiment.threads());
    }
    const ReducedWigner w = wigner_series(psi0, experiment.threads());
    return transported_pairing(box, w.k_size(), w.values, box.cell_element() * w.k_element(),
                               [&](std::size_t j) { return w.momentum(j); }, sc.observables, flow, t, sc.wigner_skip,
                               experiment.threads());
  });
  res.classical = classical.values;
  res.trajectories = classical.trajectories;
  for (std::size_t a = 0; a < res.quantum.size(); ++a) res.error.push_back(std::abs(res.quantum[a] - res.classical[a]));
  return res;
}

LogLogFit fit_loglog(const std::vector<double>& epsilon, const std::vector<double>& error) {
  if (epsilon.size() != error.size() || epsilon.size() < 2) {
    throw Error(ErrorKind::Config, "log-log fit needs at least two (epsilon, error) pairs");
  }
  const std::size_t n = epsilon.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(epsilon[i] > 0.0) || !(error[i] > 0.0)) throw Error(ErrorKind::Domain, "log-log fit needs positive values");
    x[i] = std::log(epsilon[i]);
    y[i] = std::log(error[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::Config, "log-log fit needs distinct epsilons");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i) fit.residuals.push_back(y[i] - (fit.intercept + fit.slope * x[i]));
  return fit;
}

ConvergenceReport convergence_study(const EgorovExperiment& experiment, int order) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario& sc = experiment.scenario();
  ConvergenceReport rep;
  rep.order = order;
  rep.t_final = sc.t_final;
  rep.epsilons = sc.epsilons;
  std::sort(rep.epsilons.begin(), rep.epsilons.end(), std::greater<>());
  if (rep.epsilons.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least three epsilons");
  for (double eps : rep.epsilons) {
    rep.floor_runs.push_back(egorov_error(experiment, eps, order, 0.0));
    rep.runs.push_back(egorov_error(experiment, eps, order, sc.t_final));
  }
  for (std::size_t a = 0; a < sc.observables.size(); ++a) {
    ObservableConvergence oc;
    oc.name = sc.observables[a].name();
    for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
      oc.errors.push_back(rep.runs[i].error[a]);
      oc.floors.push_back(rep.floor_runs[i].error[a]);
    }
    oc.monotone = true;
    oc.above_floor = true;
    for (std::size_t i = 0; i < oc.errors.size(); ++i) {
      if (i > 0 && !(oc.errors[i] < oc.errors[i - 1])) oc.monotone = false;
      if (!(oc.errors[i] > 3.0 * oc.floors[i])) oc.above_floor = false;
    }
    bool positive = true;
    for (double e : oc.errors) positive = positive && e > 0.0;
    if (positive) oc.fit = fit_loglog(rep.epsilons, oc.errors);
    if (!oc.monotone) rep.flags.push_back(oc.name + ": errors not strictly decreasing in epsilon");
    if (!oc.above_floor) rep.flags.push_back(oc.name + ": an error is below 3x its t = 0 floor");
    rep.observables.push_back(oc);
  }
  rep.inconclusive = !rep.observables.front().monotone || !rep.observables.front().above_floor;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// -- transport demo ------------------------------------------------------------

namespace {

// Nodes near the forward image of the initial support, as flat (row, column)
// indices. `locate` maps a canonical point to the nearest (row, column) or
// returns false when it leaves the grid.
template <typename LocateFn, typename MomentumFn>
std::vector<std::size_t> active_nodes(const BoxGrid& box, std::size_t columns, const std::vector<int>& col_shape,
                                      bool periodic_columns, const std::vector<double>& w0, MomentumFn&& momentum,
                                      LocateFn&& locate, const FlowSpec& flow, double t, int threads) {
  double big = 0.0;
  for (double v : w0) big = std::max(big, std::abs(v));
  const std::size_t rows = box.size();
  std::vector<std::vector<std::pair<IVec, IVec>>> hits(rows);
  parallel_for(rows, threads, [&](std::size_t r) {
    const Vec x = box.position(r);
    for (std::size_t j = 0; j < columns; ++j) {
      if (std::abs(w0[r * columns + j]) <= 1e-12 * big) continue;
      const CanonicalPoint q = canonical_flow({x, momentum(j)}, t, flow);
      IVec ri, ci;
      if (locate(q, ri, ci)) hits[r].emplace_back(ri, ci);
    }
  });
  const auto row_shape = box.shape();
  const int d = box.dim();
  const int reach = 2;
  std::vector<char> mark(rows * columns, 0);
  auto visit = [&](const IVec& ri, const IVec& ci) {
    const int span = 2 * reach + 1;
    int total = 1;
    for (int j = 0; j < 2 * d; ++j) total *= span;
    for (int c = 0; c < total; ++c) {
      int rem = c;
      IVec rr = ri, cc = ci;
      bool ok = true;
      for (int j = 0; j < d; ++j) {
        rr[j] += rem % span - reach;
        rem /= span;
        if (rr[j] < 0 || rr[j] >= row_shape[static_cast<std::size_t>(j)]) ok = false;
      }
      for (int j = 0; j < d; ++j) {
        cc[j] += rem % span - reach;
        rem /= span;
        const int n = col_shape[static_cast<std::size_t>(j)];
        if (periodic_columns) {
          cc[j] = ((cc[j] % n) + n) % n;
        } else if (cc[j] < 0 || cc[j] >= n) {
          ok = false;
        }
      }
      if (!ok) continue;
      std::size_t cf = 0;
      for (int j = 0; j < d; ++j) cf = cf * static_cast<std::size_t>(col_shape[static_cast<std::size_t>(j)]) +
                                       static_cast<std::size_t>(cc[j]);
      mark[box.flat(rr) * columns + cf] = 1;
    }
  };
  for (const auto& row : hits) {
    for (const auto& [ri, ci] : row) visit(ri, ci);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mark.size(); ++i) {
    if (mark[i]) out.push_back(i);
  }
  return out;
}

IVec nearest_row(const BoxGrid& box, const Vec& r, bool& inside) {
  const Vec f = box.box_fraction(r);
  const auto shape = box.shape();
  IVec i(box.dim());
  inside = true;
  for (int j = 0; j < box.dim(); ++j) {
    i[j] = static_cast<int>(std::lround(f[j] * shape[static_cast<std::size_t>(j)]));
    if (i[j] < 0 || i[j] >= shape[static_cast<std::size_t>(j)]) inside = false;
  }
  return i;
}

}  // namespace

TransportDemo transport_wigner_demo(const EgorovExperiment& experiment, double epsilon,
                                    const std::vector<double>& times) {
  const Scenario& sc = experiment.scenario();
  TransportDemo demo;
  demo.epsilon = epsilon;
  for (const auto& a : sc.observables) demo.names.push_back(a.name());
  const int threads = experiment.threads();
  const WaveField psi0 = with_context(epsilon, "preparation", [&] { return experiment.initial_state(epsilon); });
  const BoxGrid& box = psi0.grid();
  const OracleSpec oracle = experiment.oracle_spec(epsilon);
  const FlowSpec flow = experiment.flow_spec(epsilon, 0);
  const Mat to_frac = box.lattice.dual_basis().inverse();

  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  WaveField psi = psi0;
  double t_prev = 0.0;

  if (sc.free) {
    const WignerGrid w0 = wigner_transform(psi0, threads);
    const std::size_t cols = w0.p_size();
    const double el = box.cell_element() * w0.p_element();
    auto momentum = [&](std::size_t j) { return w0.momentum(j); };
    auto locate = [&](const CanonicalPoint& q, IVec& ri, IVec& ci) {
      bool in = false;
      ri = nearest_row(box, q.r, in);
      Vec c = to_frac * q.k;
      ci = IVec(box.dim());
      for (int j = 0; j < box.dim(); ++j) {
        ci[j] = static_cast<int>(std::lround(c[j] * 2.0 * box.cells[static_cast<std::size_t>(j)])) +
                w0.p_shape[static_cast<std::size_t>(j)] / 2;
        if (ci[j] < 0 || ci[j] >= w0.p_shape[static_cast<std::size_t>(j)]) in = false;
      }
      return in;
    };
    for (double t : sorted) {
      psi = with_context(epsilon, "evolution", [&] { return evolve(psi, t - t_prev, oracle); });
      t_prev = t;
      TransportSnapshot snap;
      snap.t = t;
      snap.quantum_full = wigner_transform(psi, threads);
      snap.transported_full = w0;
      std::fill(snap.transported_full.values.begin(), snap.transported_full.values.end(), 0.0);
      const auto nodes = active_nodes(box, cols, w0.p_shape, false, w0.values, momentum, locate, flow, t, threads);
      std::vector<double>& out = snap.transported_full.values;
      parallel_for(nodes.size(), threads, [&](std::size_t i) {
        const std::size_t r = nodes[i] / cols, j = nodes[i] % cols;
        const CanonicalPoint back = canonical_flow({box.position(r), w0.momentum(j)}, -t, flow);
        out[nodes[i]] = w0.interpolate(back.r, back.k);
      });
      snap.evaluated = nodes.size();
      snap.l1 = l1_distance(snap.quantum_full, snap.transported_full);
      snap.quantum_pairing = quantum_pairings(psi, sc.observables, threads);
      for (const auto& a : sc.observables) {
        double s = 0.0;
        for (std::size_t n : nodes) s += out[n] * a.value(box.position(n / cols), w0.momentum(n % cols));
        snap.transported_pairing.push_back(s * el);
      }
      demo.snapshots.push_back(std::move(snap));
    }
    return demo;
  }

  const ReducedWigner w0 = wigner_series(psi0, threads);
  const std::size_t cols = w0.k_size();
  const double el = box.cell_element() * w0.k_element();
  auto momentum = [&](std::size_t j) { return w0.momentum(j); };
  auto locate = [&](const CanonicalPoint& q, IVec& ri, IVec& ci) {
    bool in = false;
    ri = nearest_row(box, q.r, in);
    Vec c = to_frac * q.k;
    ci = IVec(box.dim());
    for (int j = 0; j < box.dim(); ++j) {
      const int n = w0.k_shape[static_cast<std::size_t>(j)];
      ci[j] = static_cast<int>(((std::lround(c[j] * n) % n) + n) % n);
    }
    return in;
  };
  for (double t : sorted) {
    psi = with_context(epsilon, "evolution", [&] { return evolve(psi, t - t_prev, oracle); });
    t_prev = t;
    TransportSnapshot snap;
    snap.t = t;
    snap.quantum = wigner_series(psi, threads);
    snap.transported = w0;
    std::fill(snap.transported.values.begin(), snap.transported.values.end(), 0.0);
    const auto nodes = active_nodes(box, cols, w0.k_shape, true, w0.values, momentum, locate, flow, t, threads);
    std::vector<double>& out = snap.transported.values;
    parallel_for(nodes.size(), threads, [&](std::size_t i) {
      const std::size_t r = nodes[i] / cols, j = nodes[i] % cols;
      const CanonicalPoint back = canonical_flow({box.position(r), w0.momentum(j)}, -t, flow);
      out[nodes[i]] = w0.interpolate(back.r, back.k);
    });
    snap.evaluated = nodes.size();
    snap.l1 = l1_distance(snap.quantum, snap.transported);
    snap.quantum_pairing = quantum_pairings(psi, sc.observables, threads);
    for (const auto& a : sc.observables) {
      double s = 0.0;
      for (std::size_t n : nodes) s += out[n] * a.value(box.position(n / cols), w0.momentum(n % cols));
      snap.transported_pairing.push_back(s * el);
    }
    demo.snapshots.push_back(std::move(snap));
  }
  return demo;
}

TransportFit fit_transport(const std::vector<TransportDemo>& demos) {
  TransportFit fit;
  if (demos.empty()) return fit;
  std::vector<const TransportDemo*> order;
  for (const auto& d : demos) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->epsilon > b->epsilon; });
  fit.names = demos.front().names;
  for (auto* d : order) fit.epsilons.push_back(d->epsilon);
  for (std::size_t a = 0; a < fit.names.size(); ++a) {
    std::vector<double> e;
    for (auto* d : order) {
      const TransportSnapshot& s = d->snapshots.back();
      e.push_back(std::abs(s.quantum_pairing[a] - s.transported_pairing[a]));
    }
    double c = 0.0;
    bool dec = true;
    for (std::size_t i = 0; i < e.size(); ++i) {
      c = std::max(c, e[i] / fit.epsilons[i]);
      if (i > 0 && !(e[i] < e[i - 1])) dec = false;
    }
    fit.errors.push_back(e);
    fit.constant.push_back(c);
    fit.decreasing.push_back(dec);
    bool positive = e.size() >= 2;
    for (double v : e) positive = positive && v > 0.0;
    fit.fits.push_back(positive ? fit_loglog(fit.epsilons, e) : LogLogFit{});
  }
  return fit;
}

// -- JSON ------------------------------------------------------------------------

namespace {

json settings_json(const Scenario& sc) {
  return json{{"scenario", sc.name},
              {"source", sc.source},
              {"dim", sc.dim},
              {"band", sc.band},
              {"mode", sc.free ? "free" : "periodic"},
              {"box", sc.box},
              {"points_per_cell", sc.points_per_cell},
              {"c_stab", sc.c_stab},
              {"dt_micro", sc.dt_micro},
              {"flow_dt", sc.flow_dt},
              {"width", sc.width},
              {"geometry_grid", sc.geometry_grid},
              {"wigner_skip", sc.wigner_skip}};
}

json result_object(const EgorovResult& r) {
  return json{{"epsilon", r.epsilon},   {"t", r.t},
              {"order", r.order},       {"observables", r.names},
              {"quantum", r.quantum},   {"classical", r.classical},
              {"error", r.error},       {"leakage", r.leakage},
              {"cells", r.cells},       {"points_per_cell", r.points_per_cell},
              {"dt_micro", r.dt_micro}, {"flow_dt", r.flow_dt},
              {"trajectories", r.trajectories}};
}

json fit_object(const LogLogFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"residuals", f.residuals}};
}

}  // namespace

std::string report_json(const ConvergenceReport& report, const Scenario& scenario) {
  json j;
  j["settings"] = settings_json(scenario);
  j["order"] = report.order;
  j["t_final"] = report.t_final;
  j["epsilons"] = report.epsilons;
  j["runs"] = json::array();
  for (const auto& r : report.runs) j["runs"].push_back(result_object(r));
  j["floor_runs"] = json::array();
  for (const auto& r : report.floor_runs) j["floor_runs"].push_back(result_object(r));
  j["observables"] = json::array();
  for (const auto& o : report.observables) {
    j["observables"].push_back(json{{"name", o.name},
                                    {"errors", o.errors},
                                    {"floors", o.floors},
                                    {"fit", fit_object(o.fit)},
                                    {"monotone", o.monotone},
                                    {"above_floor", o.above_floor}});
  }
  j["slope"] = report.observables.front().fit.slope;
  j["inconclusive"] = report.inconclusive;
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

std::string result_json(const EgorovResult& result, const Scenario& scenario) {
  json j = result_object(result);
  j["settings"] = settings_json(scenario);
  return j.dump(2) + "\n";
}

std::string transport_json(const TransportFit& fit, const std::vector<TransportDemo>& demos,
                           const Scenario& scenario) {
  json j;
  j["settings"] = settings_json(scenario);
  j["observables"] = fit.names;
  j["epsilons"] = fit.epsilons;
  j["errors"] = fit.errors;
  j["constant"] = fit.constant;
  j["decreasing"] = json::array();
  for (bool b : fit.decreasing) j["decreasing"].push_back(b);
  j["fits"] = json::array();
  for (const auto& f : fit.fits) j["fits"].push_back(fit_object(f));
  j["snapshots"] = json::array();
  for (const auto& d : demos) {
    for (const auto& s : d.snapshots) {
      j["snapshots"].push_back(json{{"epsilon", d.epsilon},
                                    {"t", s.t},
                                    {"l1", s.l1},
                                    {"evaluated", s.evaluated},
                                    {"quantum_pairing", s.quantum_pairing},
                                    {"transported_pairing", s.transported_pairing}});
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace semicl

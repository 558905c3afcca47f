#include "semicl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "semicl/errors.hpp"

namespace semicl {

namespace {

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw Error(ErrorKind::Config, source + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorKind::Config, "not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw Error(ErrorKind::Config, "not an integer: '" + s + "'");
  return static_cast<int>(v);
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  return out;
}

Vec to_vec(const std::vector<double>& v, int dim, const std::string& what) {
  if (static_cast<int>(v.size()) != dim) {
    throw Error(ErrorKind::Config, what + " needs " + std::to_string(dim) + " components");
  }
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& tokens, std::size_t first) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = first; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "expected key=value, got '" + tokens[i] + "'");
    kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  return kv;
}

Quadratic parse_quadratic(std::map<std::string, std::string>& kv, int dim) {
  Quadratic q;
  if (auto it = kv.find("c0"); it != kv.end()) {
    q.c0 = to_double(it->second);
    kv.erase(it);
  }
  if (auto it = kv.find("linear"); it != kv.end()) {
    q.linear = to_vec(to_list(it->second), dim, "linear");
    kv.erase(it);
  }
  if (auto it = kv.find("quadratic"); it != kv.end()) {
    const auto v = to_list(it->second);
    if (static_cast<int>(v.size()) != dim * dim) throw Error(ErrorKind::Config, "quadratic needs dim*dim entries");
    q.quadratic = Mat(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) q.quadratic(i, j) = v[static_cast<std::size_t>(i * dim + j)];
    }
    kv.erase(it);
  }
  return q;
}

std::string take(std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorKind::Config, "missing " + key + "=");
  std::string v = it->second;
  kv.erase(it);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::stringstream ss(line);
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

struct PendingObservable {
  std::string name;
  std::vector<ObservableTerm> terms;
};

}  // namespace

FieldTerm parse_field_term(const std::vector<std::string>& tokens, int dim) {
  if (tokens.empty()) throw Error(ErrorKind::Config, "missing field primitive");
  const std::string& kind = tokens[0];
  auto kv = key_values(tokens, 1);
  FieldTerm term;
  if (kind == "const") {
    term = ConstantTerm{to_double(take(kv, "value"))};
  } else if (kind == "trig") {
    TrigTerm t;
    t.amplitude = to_double(take(kv, "amplitude"));
    t.wavevector = to_vec(to_list(take(kv, "wavevector")), dim, "wavevector");
    if (kv.count("phase")) t.phase = to_double(take(kv, "phase"));
    term = t;
  } else if (kind == "gauss") {
    GaussianPolyTerm t;
    t.center = to_vec(to_list(take(kv, "center")), dim, "center");
    t.width = to_double(take(kv, "width"));
    t.poly = parse_quadratic(kv, dim);
    term = t;
  } else if (kind == "plateau") {
    PlateauPolyTerm t;
    t.center = to_vec(to_list(take(kv, "center")), dim, "center");
    t.halfwidth = to_vec(to_list(take(kv, "halfwidth")), dim, "halfwidth");
    t.ramp = to_vec(to_list(take(kv, "ramp")), dim, "ramp");
    t.poly = parse_quadratic(kv, dim);
    term = t;
  } else {
    throw Error(ErrorKind::Config, "unknown field primitive '" + kind + "'");
  }
  if (!kv.empty()) throw Error(ErrorKind::Config, "unknown key '" + kv.begin()->first + "' for " + kind);
  ScalarField probe(dim);
  probe.add(term);
  return term;
}

FieldTerm scale_term(const FieldTerm& term, double factor) {
  return std::visit(
      [factor](auto t) -> FieldTerm {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ConstantTerm>) {
          t.value *= factor;
        } else if constexpr (std::is_same_v<T, TrigTerm>) {
          t.amplitude *= factor;
        } else {
          t.poly.c0 *= factor;
          if (t.poly.linear.size() > 0) t.poly.linear *= factor;
          if (t.poly.quadratic.size() > 0) t.poly.quadratic *= factor;
        }
        return t;
      },
      term);
}

Scenario parse_scenario(std::istream& in, const std::string& source) {
  Scenario sc;
  sc.source = source;
  std::vector<Vec> basis_rows;
  FourierPotential::CoefficientMap coeffs;
  std::set<IndexKey> listed;
  ScalarField phi;
  std::map<int, ScalarField> vector_potential;
  std::vector<PendingObservable> observables;
  bool have_dim = false;

  std::string raw;
  int line_no = 0;
  auto need_dim = [&](int line) {
    if (!have_dim) fail(source, line, "'dim' must come first");
  };
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto tok = split(raw);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    auto args = [&](std::size_t n) {
      if (tok.size() != n + 1) fail(source, line_no, "'" + key + "' takes " + std::to_string(n) + " value(s)");
    };
    auto rest_vec = [&](const std::string& what) {
      need_dim(line_no);
      std::vector<double> v;
      for (std::size_t i = 1; i < tok.size(); ++i) v.push_back(to_double(tok[i]));
      return to_vec(v, sc.dim, what);
    };
    try {
      if (key == "name") {
        args(1);
        sc.name = tok[1];
      } else if (key == "dim") {
        args(1);
        sc.dim = to_int(tok[1]);
        if (sc.dim != 1 && sc.dim != 2) fail(source, line_no, "dim must be 1 or 2");
        have_dim = true;
        phi = ScalarField(sc.dim);
      } else if (key == "basis") {
        basis_rows.push_back(rest_vec("basis vector"));
      } else if (key == "coeff") {
        need_dim(line_no);
        args(static_cast<std::size_t>(sc.dim) + 2);
        IVec g(sc.dim);
        for (int j = 0; j < sc.dim; ++j) g[j] = to_int(tok[static_cast<std::size_t>(j) + 1]);
        const cplx c(to_double(tok[static_cast<std::size_t>(sc.dim) + 1]),
                     to_double(tok[static_cast<std::size_t>(sc.dim) + 2]));
        const IndexKey k = to_key(g), mk = to_key(IVec(-g));
        if (listed.count(k) && std::abs(coeffs[k] - c) > 1e-14) fail(source, line_no, "coefficient listed twice");
        // The partner -G is implied; an explicit conflicting partner is an error.
        if (coeffs.count(mk) && std::abs(coeffs[mk] - std::conj(c)) > 1e-14) {
          fail(source, line_no, "coefficient violates the reality condition against its -G partner");
        }
        listed.insert(k);
        coeffs[k] = c;
        coeffs[mk] = std::conj(c);
      } else if (key == "cutoff") {
        args(1);
        sc.cutoff = to_double(tok[1]);
      } else if (key == "band") {
        args(1);
        sc.band = to_int(tok[1]);
      } else if (key == "bands_out") {
        args(1);
        sc.bands_out = to_int(tok[1]);
      } else if (key == "path_points") {
        args(1);
        sc.path_points = to_int(tok[1]);
      } else if (key == "geometry_grid") {
        need_dim(line_no);
        args(static_cast<std::size_t>(sc.dim));
        sc.geometry_grid.clear();
        for (int j = 0; j < sc.dim; ++j) sc.geometry_grid.push_back(to_int(tok[static_cast<std::size_t>(j) + 1]));
      } else if (key == "phi") {
        need_dim(line_no);
        phi.add(parse_field_term({tok.begin() + 1, tok.end()}, sc.dim));
      } else if (key == "vector_potential") {
        need_dim(line_no);
        if (tok.size() < 3) fail(source, line_no, "vector_potential <component> <primitive> ...");
        const int j = to_int(tok[1]);
        if (j < 1 || j > sc.dim) fail(source, line_no, "vector potential component out of range");
        auto& f = vector_potential.try_emplace(j, ScalarField(sc.dim)).first->second;
        f.add(parse_field_term({tok.begin() + 2, tok.end()}, sc.dim));
      } else if (key == "uniform_b") {
        args(1);
        sc.uniform_b = to_double(tok[1]);
      } else if (key == "mode") {
        args(1);
        if (tok[1] == "free") {
          sc.free = true;
        } else if (tok[1] == "periodic") {
          sc.free = false;
        } else {
          fail(source, line_no, "mode is 'free' or 'periodic'");
        }
      } else if (key == "k0") {
        sc.k0 = rest_vec("k0");
      } else if (key == "x0") {
        sc.x0 = rest_vec("x0");
      } else if (key == "width") {
        args(1);
        sc.width = to_double(tok[1]);
      } else if (key == "epsilons") {
        if (tok.size() < 2) fail(source, line_no, "epsilons needs at least one value");
        sc.epsilons.clear();
        for (std::size_t i = 1; i < tok.size(); ++i) sc.epsilons.push_back(to_double(tok[i]));
      } else if (key == "t_final") {
        args(1);
        sc.t_final = to_double(tok[1]);
      } else if (key == "order") {
        args(1);
        sc.order = to_int(tok[1]);
        if (sc.order != 0 && sc.order != 1) fail(source, line_no, "order is 0 or 1");
      } else if (key == "box") {
        need_dim(line_no);
        args(static_cast<std::size_t>(sc.dim));
        sc.box.clear();
        for (int j = 0; j < sc.dim; ++j) sc.box.push_back(to_double(tok[static_cast<std::size_t>(j) + 1]));
      } else if (key == "points_per_cell") {
        args(1);
        sc.points_per_cell = to_int(tok[1]);
      } else if (key == "c_stab") {
        args(1);
        sc.c_stab = to_double(tok[1]);
      } else if (key == "dt_micro") {
        args(1);
        sc.dt_micro = to_double(tok[1]);
      } else if (key == "flow_dt") {
        args(1);
        sc.flow_dt = to_double(tok[1]);
      } else if (key == "wigner_skip") {
        args(1);
        sc.wigner_skip = to_double(tok[1]);
      } else if (key == "snapshots") {
        sc.snapshot_times.clear();
        for (std::size_t i = 1; i < tok.size(); ++i) sc.snapshot_times.push_back(to_double(tok[i]));
      } else if (key == "observable") {
        need_dim(line_no);
        if (tok.size() < 5) fail(source, line_no, "observable <name> cos|sin gamma=<tuple> <primitive> ...");
        const std::string& kind = tok[2];
        if (kind != "cos" && kind != "sin") fail(source, line_no, "observable kind is cos or sin");
        if (tok[3].rfind("gamma=", 0) != 0) fail(source, line_no, "expected gamma=<tuple>");
        const auto gv = to_list(tok[3].substr(6));
        if (static_cast<int>(gv.size()) != sc.dim) fail(source, line_no, "gamma needs dim components");
        IVec gamma(sc.dim);
        for (int j = 0; j < sc.dim; ++j) {
          const double g = gv[static_cast<std::size_t>(j)];
          if (g != std::floor(g)) fail(source, line_no, "gamma components are integers");
          gamma[j] = static_cast<int>(g);
        }
        const FieldTerm f = parse_field_term({tok.begin() + 4, tok.end()}, sc.dim);
        PendingObservable* target = nullptr;
        for (auto& o : observables) {
          if (o.name == tok[1]) target = &o;
        }
        if (target == nullptr) {
          observables.push_back({tok[1], {}});
          target = &observables.back();
        }
        auto field = [&](double s) {
          ScalarField out(sc.dim);
          if (s != 0.0) out.add(scale_term(f, s));
          return out;
        };
        const bool zero = gamma.isZero();
        if (kind == "cos") {
          if (zero) {
            target->terms.push_back({gamma, field(1.0), field(0.0)});
          } else {
            target->terms.push_back({gamma, field(0.5), field(0.0)});
            target->terms.push_back({IVec(-gamma), field(0.5), field(0.0)});
          }
        } else {
          if (zero) fail(source, line_no, "sin term needs gamma != 0");
          target->terms.push_back({gamma, field(0.0), field(-0.5)});
          target->terms.push_back({IVec(-gamma), field(0.0), field(0.5)});
        }
      } else if (key == "point") {
        need_dim(line_no);
        auto kv = key_values(tok, 1);
        PhasePoint p;
        p.r = to_vec(to_list(take(kv, "r")), sc.dim, "r");
        p.kappa = to_vec(to_list(take(kv, "kappa")), sc.dim, "kappa");
        if (!kv.empty()) fail(source, line_no, "unknown key '" + kv.begin()->first + "'");
        sc.points.push_back(p);
      } else if (key == "flow_t") {
        args(1);
        sc.flow_t = to_double(tok[1]);
      } else if (key == "flow_epsilon") {
        args(1);
        sc.flow_epsilon = to_double(tok[1]);
      } else if (key == "trajectory_dt") {
        args(1);
        sc.trajectory_dt = to_double(tok[1]);
      } else if (key == "integrator") {
        args(1);
        if (tok[1] == "rk4") {
          sc.integrator = Integrator::RK4;
        } else if (tok[1] == "midpoint") {
          sc.integrator = Integrator::ImplicitMidpoint;
        } else {
          fail(source, line_no, "integrator is rk4 or midpoint");
        }
      } else if (key == "hofstadter") {
        args(3);
        sc.hof_p = to_int(tok[1]);
        sc.hof_q = to_int(tok[2]);
        sc.hof_grid = to_int(tok[3]);
      } else {
        fail(source, line_no, "unknown keyword '" + key + "'");
      }
    } catch (const Error& e) {
      const std::string what = e.what();
      if (e.kind() != ErrorKind::Config || what.find(source + ":") != std::string::npos) throw;
      const std::string prefix = std::string(to_string(ErrorKind::Config)) + ": ";
      fail(source, line_no, what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what);
    }
  }

  if (!have_dim) fail(source, line_no, "missing 'dim'");
  if (basis_rows.empty()) {
    sc.lattice = Lattice::cubic(sc.dim, 1.0);
  } else {
    if (static_cast<int>(basis_rows.size()) != sc.dim) fail(source, line_no, "need one 'basis' line per dimension");
    Mat b(sc.dim, sc.dim);
    for (int j = 0; j < sc.dim; ++j) b.col(j) = basis_rows[static_cast<std::size_t>(j)];
    sc.lattice = Lattice(b);
  }
  sc.potential = FourierPotential(sc.lattice, coeffs);
  if (sc.free && !sc.potential.is_zero()) fail(source, line_no, "mode free needs a zero lattice potential");
  std::vector<ScalarField> a;
  if (!vector_potential.empty()) {
    for (int j = 1; j <= sc.dim; ++j) {
      auto it = vector_potential.find(j);
      a.push_back(it == vector_potential.end() ? ScalarField(sc.dim) : it->second);
    }
  }
  sc.fields = ExternalFields(phi, a);
  if (sc.k0.size() == 0) sc.k0 = Vec::Zero(sc.dim);
  if (sc.x0.size() == 0) sc.x0 = Vec::Zero(sc.dim);
  if (sc.geometry_grid.empty()) sc.geometry_grid.assign(static_cast<std::size_t>(sc.dim), sc.dim == 1 ? 128 : 32);
  if (sc.band < 1) fail(source, line_no, "band must be at least 1");
  if (!(sc.width > 0.0)) fail(source, line_no, "width must be positive");
  for (double e : sc.epsilons) {
    if (!(e > 0.0)) fail(source, line_no, "epsilons must be positive");
  }
  for (const auto& o : observables) {
    sc.observables.emplace_back(sc.lattice, o.terms, o.name);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

FourierPotential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open potential file '" + path + "'");
  return parse_scenario(in, path).potential;
}

PlaneWaveBasis Scenario::plane_wave_basis() const {
  if (cutoff > 0.0) return PlaneWaveBasis(lattice, cutoff);
  return PlaneWaveBasis::for_bands(lattice, std::max(band, bands_out) + 2);
}

BoxGrid Scenario::box_grid(double epsilon) const {
  if (static_cast<int>(box.size()) != dim) throw Error(ErrorKind::Config, "scenario has no 'box' line");
  std::vector<int> cells;
  for (double extent : box) {
    const double n = extent / epsilon;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 * n || static_cast<long>(rounded) % 2 != 0) {
      throw Error(ErrorKind::Config, "box extent " + std::to_string(extent) + " is not an even number of cells at epsilon = " +
                                         std::to_string(epsilon));
    }
    cells.push_back(static_cast<int>(rounded));
  }
  return BoxGrid(lattice, epsilon, cells, points_per_cell);
}

}  // namespace semicl

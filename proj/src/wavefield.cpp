#include "semicl/wavefield.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "semicl/errors.hpp"
#include "semicl/fft.hpp"

namespace semicl {

BoxGrid::BoxGrid(Lattice lat, double eps, std::vector<int> n, int points, int min_points)
    : lattice(std::move(lat)), epsilon(eps), cells(std::move(n)), points_per_cell(points) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (static_cast<int>(cells.size()) != lattice.dim()) {
    throw Error(ErrorKind::Config, "box needs one cell count per lattice direction");
  }
  for (int c : cells) {
    if (c < 1) throw Error(ErrorKind::Config, "box cell counts must be positive");
  }
  if (points_per_cell < min_points) {
    throw Error(ErrorKind::Config, "points_per_cell = " + std::to_string(points_per_cell) +
                                       " is below the floor of " + std::to_string(min_points));
  }
  if (points_per_cell % 2 != 0) throw Error(ErrorKind::Config, "points_per_cell must be even");
}

std::vector<int> BoxGrid::shape() const {
  std::vector<int> s;
  for (int c : cells) s.push_back(c * points_per_cell);
  return s;
}

std::size_t BoxGrid::size() const {
  std::size_t n = 1;
  for (int c : cells) n *= static_cast<std::size_t>(c * points_per_cell);
  return n;
}

double BoxGrid::cell_element() const {
  return std::pow(epsilon / points_per_cell, dim()) * lattice.cell_volume();
}

Mat BoxGrid::box_edges() const {
  Mat e = lattice.basis() * epsilon;
  for (int j = 0; j < dim(); ++j) e.col(j) *= cells[static_cast<std::size_t>(j)];
  return e;
}

IVec BoxGrid::node(std::size_t flat) const {
  const int d = dim();
  IVec i(d);
  if (d == 1) {
    i[0] = static_cast<int>(flat);
  } else {
    const std::size_t n1 = static_cast<std::size_t>(cells[1] * points_per_cell);
    i[0] = static_cast<int>(flat / n1);
    i[1] = static_cast<int>(flat % n1);
  }
  return i;
}

std::size_t BoxGrid::flat(const IVec& i) const {
  if (dim() == 1) return static_cast<std::size_t>(i[0]);
  return static_cast<std::size_t>(i[0]) * static_cast<std::size_t>(cells[1] * points_per_cell) +
         static_cast<std::size_t>(i[1]);
}

Vec BoxGrid::position(std::size_t f) const {
  return lattice.basis() * (node(f).cast<double>() * (epsilon / points_per_cell));
}

Vec BoxGrid::wavevector(const IVec& mode) const {
  Vec m(dim());
  for (int j = 0; j < dim(); ++j) m[j] = static_cast<double>(mode[j]) / cells[static_cast<std::size_t>(j)];
  return lattice.dual_basis() * m / epsilon;
}

Vec BoxGrid::box_fraction(const Vec& x) const { return box_edges().inverse() * x; }

// ---------------------------------------------------------------------------

WaveField::WaveField(BoxGrid grid, std::vector<cplx> samples) : grid_(std::move(grid)), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size()) throw Error(ErrorKind::Config, "sample count does not match the box grid");
  stored_norm_ = norm_squared();
}

double WaveField::norm_squared() const {
  double s = 0.0;
  for (const cplx& v : samples_) s += std::norm(v);
  return s * grid_.cell_element();
}

void WaveField::normalize() {
  const double n = norm_squared();
  if (!(n > 0.0)) throw Error(ErrorKind::Config, "cannot normalize a zero wave field");
  const double scale = 1.0 / std::sqrt(n);
  for (cplx& v : samples_) v *= scale;
  stored_norm_ = norm_squared();
}

cplx inner_product(const WaveField& a, const WaveField& b) {
  if (a.samples().size() != b.samples().size()) throw Error(ErrorKind::Config, "wave fields live on different grids");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) s += std::conj(a.samples()[i]) * b.samples()[i];
  return s * a.grid().cell_element();
}

double l2_distance(const WaveField& a, const WaveField& b) {
  if (a.samples().size() != b.samples().size()) throw Error(ErrorKind::Config, "wave fields live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) s += std::norm(a.samples()[i] - b.samples()[i]);
  return std::sqrt(s * a.grid().cell_element());
}

// ---------------------------------------------------------------------------

cplx ObservableTerm::coefficient(const Vec& q) const {
  const double r = re.empty() ? 0.0 : re.value(q);
  const double i = im.empty() ? 0.0 : im.value(q);
  return {r, i};
}

PeriodicObservable::PeriodicObservable(Lattice lattice, std::vector<ObservableTerm> terms, std::string name)
    : lattice_(std::move(lattice)), terms_(std::move(terms)), name_(std::move(name)) {
  const int d = lattice_.dim();
  for (const ObservableTerm& t : terms_) {
    if (t.gamma.size() != d) throw Error(ErrorKind::Config, "observable term has a lattice index of wrong rank");
  }
  // Reality: every (γ, f) needs a (-γ, conj f) partner, compared at a few
  // probe points.
  for (const ObservableTerm& t : terms_) {
    if (t.gamma.isZero()) {
      if (!t.im.empty()) throw Error(ErrorKind::Config, "the γ = 0 observable term must be real");
      continue;
    }
    const IVec neg = -t.gamma;
    bool found = false;
    for (const ObservableTerm& u : terms_) {
      if (u.gamma != neg) continue;
      const std::size_t probes = 5;
      bool match = true;
      for (std::size_t s = 0; s < probes && match; ++s) {
        Vec q(d);
        for (int j = 0; j < d; ++j) q[j] = 0.37 * static_cast<double>(s) - 0.9 + 0.21 * j;
        match = std::abs(u.coefficient(q) - std::conj(t.coefficient(q))) <= 1e-12 * (1.0 + std::abs(t.coefficient(q)));
      }
      if (match) {
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorKind::Config, "observable term lacks its (-γ, conj f) partner");
  }
}

PeriodicObservable PeriodicObservable::cosine(const Lattice& lattice, const IVec& gamma, const ScalarField& f,
                                              std::string name) {
  if (gamma.isZero()) return position(lattice, f, std::move(name));
  ScalarField half(f.dim());
  for (const FieldTerm& t : f.terms()) {
    std::visit(
        [&half](auto term) {
          using T = std::decay_t<decltype(term)>;
          if constexpr (std::is_same_v<T, ConstantTerm>) {
            term.value *= 0.5;
          } else if constexpr (std::is_same_v<T, TrigTerm>) {
            term.amplitude *= 0.5;
          } else {
            term.poly.c0 *= 0.5;
            if (term.poly.linear.size() > 0) term.poly.linear *= 0.5;
            if (term.poly.quadratic.rows() > 0) term.poly.quadratic *= 0.5;
          }
          half.add(term);
        },
        t);
  }
  std::vector<ObservableTerm> terms{{gamma, half, ScalarField(f.dim())}, {IVec(-gamma), half, ScalarField(f.dim())}};
  return PeriodicObservable(lattice, std::move(terms), std::move(name));
}

PeriodicObservable PeriodicObservable::position(const Lattice& lattice, const ScalarField& f, std::string name) {
  std::vector<ObservableTerm> terms{{IVec::Zero(lattice.dim()), f, ScalarField(f.dim())}};
  return PeriodicObservable(lattice, std::move(terms), std::move(name));
}

double PeriodicObservable::value(const Vec& q, const Vec& p) const {
  cplx s = 0.0;
  for (const ObservableTerm& t : terms_) {
    const double arg = lattice_.lattice_vector(t.gamma).dot(p);
    s += t.coefficient(q) * cplx(std::cos(arg), std::sin(arg));
  }
  return s.real();
}

// ---------------------------------------------------------------------------

namespace {

void for_each_index(const std::vector<int>& lo, const std::vector<int>& hi, const std::function<void(const IVec&)>& fn) {
  const int d = static_cast<int>(lo.size());
  IVec i(d);
  if (d == 1) {
    for (int a = lo[0]; a < hi[0]; ++a) {
      i[0] = a;
      fn(i);
    }
    return;
  }
  for (int a = lo[0]; a < hi[0]; ++a) {
    for (int b = lo[1]; b < hi[1]; ++b) {
      i << a, b;
      fn(i);
    }
  }
}

}  // namespace

std::vector<IVec> box_momentum_indices(const BoxGrid& grid) {
  std::vector<int> lo, hi;
  for (int n : grid.cells) {
    lo.push_back(-(n / 2));
    hi.push_back(n - n / 2);
  }
  std::vector<IVec> out;
  for_each_index(lo, hi, [&out](const IVec& i) { out.push_back(i); });
  return out;
}

Vec box_momentum(const BoxGrid& grid, const IVec& kappa) {
  Vec f(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) f[j] = static_cast<double>(kappa[j]) / grid.cells[static_cast<std::size_t>(j)];
  return grid.lattice.dual_basis() * f;
}

WaveField build_band_wavepacket(const BoxGrid& grid, const FourierPotential& potential, const PlaneWaveBasis& basis,
                                int band, const Vec& k0, const Vec& x0, double sigma) {
  const int d = grid.dim();
  if (!(sigma > 0.0)) throw Error(ErrorKind::Config, "packet momentum width must be positive");
  if (k0.size() != d || x0.size() != d) throw Error(ErrorKind::Config, "packet centre has wrong rank");
  const Lattice& lat = grid.lattice;

  // Box momentum index nearest to k0 (unfolded).
  const Vec f0 = lat.to_fractional_k(k0);
  IVec centre(d);
  for (int j = 0; j < d; ++j) centre[j] = static_cast<int>(std::lround(f0[j] * grid.cells[static_cast<std::size_t>(j)]));

  auto envelope = [&](const Vec& k) { return std::exp(-(k - k0).squaredNorm() / (4.0 * sigma * sigma)); };
  double boundary = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int s : {-1, 1}) {
      IVec edge = centre;
      edge[j] += s * (grid.cells[static_cast<std::size_t>(j)] / 2);
      boundary = std::max(boundary, envelope(box_momentum(grid, edge)));
    }
  }
  if (boundary > 1e-8) {
    std::ostringstream msg;
    msg << "packet envelope is " << boundary << " of its peak at the zone boundary; reduce the momentum width "
        << sigma << " or enlarge the box";
    throw Error(ErrorKind::PacketWidth, msg.str());
  }

  // Offsets ordered so that every transport predecessor comes first.
  std::vector<int> lo, hi;
  for (int n : grid.cells) {
    lo.push_back(-(n / 2));
    hi.push_back(n - n / 2);
  }
  std::vector<IVec> offsets;
  for_each_index(lo, hi, [&](const IVec& o) {
    if (envelope(box_momentum(grid, IVec(centre + o))) >= 1e-18) offsets.push_back(o);
  });
  std::stable_sort(offsets.begin(), offsets.end(), [d](const IVec& a, const IVec& b) {
    const int la = d > 1 ? std::abs(a[1]) : 0, lb = d > 1 ? std::abs(b[1]) : 0;
    if (la != lb) return la < lb;
    return std::abs(a[0]) < std::abs(b[0]);
  });

  const std::vector<int> shape = grid.shape();
  std::vector<cplx> spectrum(grid.size(), cplx(0.0, 0.0));
  std::map<IndexKey, Eigen::VectorXcd> transported;
  double dropped = 0.0, kept = 0.0;
  for (const IVec& o : offsets) {
    const IVec kappa = centre + o;
    const Vec k = box_momentum(grid, kappa);
    const BlochFiber fiber = solve_fiber(k, potential, basis, band);
    Eigen::VectorXcd u = fiber.vector(band);
    IVec prev = o;
    bool has_prev = false;
    if (d > 1 && o[1] != 0) {
      prev[1] -= o[1] > 0 ? 1 : -1;
      has_prev = true;
    } else if (o[0] != 0) {
      prev[0] -= o[0] > 0 ? 1 : -1;
      has_prev = true;
    }
    if (has_prev) {
      auto it = transported.find(to_key(prev));
      if (it != transported.end()) {
        const cplx ov = it->second.dot(u);
        if (std::abs(ov) > 0.0) u *= std::conj(ov) / std::abs(ov);
      }
    }
    transported.emplace(to_key(o), u);

    const double g = envelope(k);
    const double phase_arg = -(k - k0).dot(x0) / grid.epsilon;
    const cplx weight = g * cplx(std::cos(phase_arg), std::sin(phase_arg));
    for (int b = 0; b < basis.size(); ++b) {
      const IVec& gi = basis.indices()[static_cast<std::size_t>(b)];
      IVec mode(d);
      bool inside = true;
      for (int j = 0; j < d; ++j) {
        mode[j] = kappa[j] + gi[j] * grid.cells[static_cast<std::size_t>(j)];
        const int n = shape[static_cast<std::size_t>(j)];
        inside = inside && mode[j] >= -n / 2 && mode[j] < n / 2;
      }
      const cplx c = weight * u[b];
      if (!inside) {
        dropped += std::norm(c);
        continue;
      }
      kept += std::norm(c);
      IVec pos(d);
      for (int j = 0; j < d; ++j) pos[j] = fft_position(mode[j], shape[static_cast<std::size_t>(j)]);
      spectrum[grid.flat(pos)] += c;
    }
  }
  if (dropped > 1e-14 * kept) {
    std::ostringstream msg;
    msg << "points_per_cell " << grid.points_per_cell << " cannot hold the plane-wave content of band " << band
        << " (relative weight " << dropped / kept << " beyond the grid Nyquist limit)";
    throw Error(ErrorKind::Config, msg.str());
  }
  FftPlan backward(shape, FFTW_BACKWARD);
  backward.execute(spectrum);
  WaveField psi(grid, std::move(spectrum));
  psi.normalize();
  return psi;
}

BlochFloquetData bloch_floquet(const WaveField& psi, const FourierPotential& potential, const PlaneWaveBasis& basis,
                               double skip) {
  const BoxGrid& grid = psi.grid();
  const int d = grid.dim();
  const std::vector<int> shape = grid.shape();
  std::vector<cplx> spectrum = psi.samples();
  FftPlan forward(shape, FFTW_FORWARD);
  forward.execute(spectrum);
  const double scale = std::sqrt(grid.cell_element() / static_cast<double>(grid.size()));

  BlochFloquetData out;
  out.total = psi.norm_squared();
  double inside_total = 0.0;
  for (const IVec& kappa : box_momentum_indices(grid)) {
    Eigen::VectorXcd c(basis.size());
    for (int b = 0; b < basis.size(); ++b) {
      const IVec& gi = basis.indices()[static_cast<std::size_t>(b)];
      IVec pos(d);
      bool inside = true;
      for (int j = 0; j < d; ++j) {
        const int mode = kappa[j] + gi[j] * grid.cells[static_cast<std::size_t>(j)];
        const int n = shape[static_cast<std::size_t>(j)];
        inside = inside && mode >= -n / 2 && mode < n / 2;
        pos[j] = fft_position(mode, n);
      }
      c[b] = inside ? spectrum[grid.flat(pos)] * scale : cplx(0.0, 0.0);
    }
    const double weight = c.squaredNorm();
    inside_total += weight;
    if (weight <= skip * out.total) continue;
    const BlochFiber fiber = solve_fiber(box_momentum(grid, kappa), potential, basis);
    out.kappa.push_back(kappa);
    out.coefficients.push_back(fiber.vectors.adjoint() * c);
  }
  out.outside = std::max(0.0, out.total - inside_total);
  return out;
}

double band_leakage(const WaveField& psi, const FourierPotential& potential, const PlaneWaveBasis& basis, int band) {
  const BlochFloquetData data = bloch_floquet(psi, potential, basis);
  double in_band = 0.0;
  for (const Eigen::VectorXcd& c : data.coefficients) in_band += std::norm(c[band - 1]);
  return std::clamp(1.0 - in_band / data.total, 0.0, 1.0);
}

std::vector<double> lattice_potential_samples(const BoxGrid& grid, const FourierPotential& potential) {
  const int d = grid.dim();
  const int p = grid.points_per_cell;
  std::vector<double> cell(static_cast<std::size_t>(d == 1 ? p : p * p));
  for (std::size_t s = 0; s < cell.size(); ++s) {
    Vec frac(d);
    if (d == 1) {
      frac[0] = static_cast<double>(s) / p;
    } else {
      frac << static_cast<double>(s / static_cast<std::size_t>(p)) / p, static_cast<double>(s % static_cast<std::size_t>(p)) / p;
    }
    cell[s] = potential.is_zero() ? 0.0 : potential.value(grid.lattice.basis() * frac);
  }
  std::vector<double> out(grid.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    const IVec i = grid.node(f);
    const std::size_t s = d == 1 ? static_cast<std::size_t>(i[0] % p)
                                 : static_cast<std::size_t>((i[0] % p) * p + i[1] % p);
    out[f] = cell[s];
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_wavefield(std::ostream& out, const WaveField& psi) {
  const BoxGrid& g = psi.grid();
  out.precision(17);
  out << "# wavefield\n# dim " << g.dim() << "\n# epsilon " << g.epsilon << "\n# basis";
  for (int r = 0; r < g.dim(); ++r)
    for (int c = 0; c < g.dim(); ++c) out << ' ' << g.lattice.basis()(r, c);
  out << "\n# cells";
  for (int c : g.cells) out << ' ' << c;
  out << "\n# points_per_cell " << g.points_per_cell << "\nre,im\n";
  for (const cplx& v : psi.samples()) out << v.real() << ',' << v.imag() << '\n';
}

WaveField read_wavefield(std::istream& in) {
  std::string line;
  int dim = 0, points = 0;
  double eps = 0.0;
  std::vector<double> basis;
  std::vector<int> cells;
  while (std::getline(in, line)) {
    if (line.rfind("re,im", 0) == 0) break;
    if (line.empty() || line[0] != '#') throw Error(ErrorKind::Config, "malformed wavefield header: " + line);
    std::istringstream ls(line.substr(1));
    std::string key;
    ls >> key;
    if (key == "dim") {
      ls >> dim;
    } else if (key == "epsilon") {
      ls >> eps;
    } else if (key == "basis") {
      for (double v; ls >> v;) basis.push_back(v);
    } else if (key == "cells") {
      for (int v; ls >> v;) cells.push_back(v);
    } else if (key == "points_per_cell") {
      ls >> points;
    }
  }
  if (dim < 1 || dim > 2 || static_cast<int>(basis.size()) != dim * dim) {
    throw Error(ErrorKind::Config, "wavefield header lacks dim/basis");
  }
  Mat b(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) b(r, c) = basis[static_cast<std::size_t>(r * dim + c)];
  BoxGrid grid(Lattice(b), eps, cells, points, 2);
  std::vector<cplx> samples;
  samples.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::Config, "malformed wavefield sample: " + line);
    samples.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return WaveField(grid, std::move(samples));
}

}  // namespace semicl

#include "semicl/wigner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "semicl/errors.hpp"
#include "semicl/fft.hpp"
#include "semicl/parallel.hpp"

namespace semicl {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  return n;
}

IVec unflatten(std::size_t flat, const std::vector<int>& shape) {
  IVec i(static_cast<int>(shape.size()));
  for (int j = static_cast<int>(shape.size()) - 1; j >= 0; --j) {
    const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(j)]);
    i[j] = static_cast<int>(flat % n);
    flat /= n;
  }
  return i;
}

std::size_t flatten(const IVec& i, const std::vector<int>& shape) {
  std::size_t f = 0;
  for (std::size_t j = 0; j < shape.size(); ++j) {
    f = f * static_cast<std::size_t>(shape[j]) + static_cast<std::size_t>(i[static_cast<int>(j)]);
  }
  return f;
}

bool inside(const IVec& i, const std::vector<int>& shape) {
  for (int j = 0; j < i.size(); ++j) {
    if (i[j] < 0 || i[j] >= shape[static_cast<std::size_t>(j)]) return false;
  }
  return true;
}

// Catmull-Rom weights for the nodes floor(x) - 1 .. floor(x) + 2.
struct Stencil {
  int base = 0;
  std::array<double, 4> w{};
};

Stencil cubic_stencil(double x) {
  Stencil s;
  const double fl = std::floor(x);
  const double t = x - fl;
  s.base = static_cast<int>(fl) - 1;
  const double t2 = t * t, t3 = t2 * t;
  s.w = {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
         0.5 * (t3 - t2)};
  return s;
}

// Continuous node coordinates of q on the box grid.
Vec node_coordinates(const BoxGrid& box, const Vec& q) {
  Vec f = box.box_fraction(q);
  const auto shape = box.shape();
  for (int j = 0; j < f.size(); ++j) f[j] *= shape[static_cast<std::size_t>(j)];
  return f;
}

// Σ over the tensor stencil of (q node, p node) pairs. `p_index` maps a
// stencil node to a flat p index or -1.
template <typename PIndex>
double tensor_interpolate(const BoxGrid& box, const Vec& q, const Vec& pc, const std::vector<int>& p_shape,
                          const std::vector<double>& values, PIndex&& p_index) {
  const int d = box.dim();
  const auto q_shape = box.shape();
  const Vec qc = node_coordinates(box, q);
  std::array<Stencil, 2> sq, sp;
  for (int j = 0; j < d; ++j) {
    sq[static_cast<std::size_t>(j)] = cubic_stencil(qc[j]);
    sp[static_cast<std::size_t>(j)] = cubic_stencil(pc[j]);
  }
  const std::size_t np = product(p_shape);
  const int count = d == 1 ? 4 : 16;
  double acc = 0.0;
  for (int a = 0; a < count; ++a) {
    IVec qi(d);
    double wq = 1.0;
    for (int j = 0; j < d; ++j) {
      const int o = d == 1 ? a : (j == 0 ? a / 4 : a % 4);
      qi[j] = sq[static_cast<std::size_t>(j)].base + o;
      wq *= sq[static_cast<std::size_t>(j)].w[static_cast<std::size_t>(o)];
    }
    if (wq == 0.0 || !inside(qi, q_shape)) continue;
    const std::size_t qf = box.flat(qi);
    for (int b = 0; b < count; ++b) {
      IVec pi(d);
      double wp = 1.0;
      for (int j = 0; j < d; ++j) {
        const int o = d == 1 ? b : (j == 0 ? b / 4 : b % 4);
        pi[j] = sp[static_cast<std::size_t>(j)].base + o;
        wp *= sp[static_cast<std::size_t>(j)].w[static_cast<std::size_t>(o)];
      }
      if (wp == 0.0) continue;
      const long pf = p_index(pi);
      if (pf < 0) continue;
      acc += wq * wp * values[qf * np + static_cast<std::size_t>(pf)];
    }
  }
  return acc;
}

void check_same_grid(const BoxGrid& a, const BoxGrid& b) {
  if (a.shape() != b.shape() || a.epsilon != b.epsilon) {
    throw Error(ErrorKind::Config, "Wigner grids differ");
  }
}

}  // namespace

// -- WignerGrid -------------------------------------------------------------------

std::size_t WignerGrid::p_size() const { return product(p_shape); }

IVec WignerGrid::p_mode(std::size_t p_flat) const {
  IVec m = unflatten(p_flat, p_shape);
  for (int j = 0; j < m.size(); ++j) m[j] -= p_shape[static_cast<std::size_t>(j)] / 2;
  return m;
}

Vec WignerGrid::momentum(std::size_t p_flat) const {
  const IVec m = p_mode(p_flat);
  Vec c(m.size());
  for (int j = 0; j < m.size(); ++j) c[j] = static_cast<double>(m[j]) / (2.0 * box.cells[static_cast<std::size_t>(j)]);
  return box.lattice.dual_basis() * c;
}

double WignerGrid::p_element() const {
  double n = 1.0;
  for (int c : box.cells) n *= 2.0 * c;
  return box.lattice.bz_volume() / n;
}

double WignerGrid::interpolate(const Vec& q, const Vec& p) const {
  const int d = box.dim();
  Vec pc = box.lattice.dual_basis().inverse() * p;
  for (int j = 0; j < d; ++j) {
    pc[j] = pc[j] * 2.0 * box.cells[static_cast<std::size_t>(j)] + p_shape[static_cast<std::size_t>(j)] / 2;
  }
  return tensor_interpolate(box, q, pc, p_shape, values, [&](const IVec& pi) -> long {
    if (!inside(pi, p_shape)) return -1;
    return static_cast<long>(flatten(pi, p_shape));
  });
}

// -- ReducedWigner ------------------------------------------------------------------

std::size_t ReducedWigner::k_size() const { return product(k_shape); }

IVec ReducedWigner::k_index(std::size_t k_flat) const { return unflatten(k_flat, k_shape); }

Vec ReducedWigner::momentum(std::size_t k_flat) const {
  const IVec kappa = k_index(k_flat);
  Vec c(kappa.size());
  for (int j = 0; j < kappa.size(); ++j) c[j] = static_cast<double>(kappa[j]) / k_shape[static_cast<std::size_t>(j)];
  return box.lattice.dual_basis() * c;
}

double ReducedWigner::k_element() const {
  return box.lattice.bz_volume() / static_cast<double>(k_size());
}

double ReducedWigner::interpolate(const Vec& r, const Vec& k) const {
  const int d = box.dim();
  Vec kc = box.lattice.dual_basis().inverse() * k;
  for (int j = 0; j < d; ++j) kc[j] *= k_shape[static_cast<std::size_t>(j)];
  return tensor_interpolate(box, r, kc, k_shape, values, [&](const IVec& ki) -> long {
    IVec w(ki.size());
    for (int j = 0; j < ki.size(); ++j) w[j] = fft_position(ki[j], k_shape[static_cast<std::size_t>(j)]);
    return static_cast<long>(flatten(w, k_shape));
  });
}

// -- transforms ------------------------------------------------------------------------

namespace {

// Fills buf (FFT layout over `shape`) with ψ*(q + s) ψ(q - s) for the node
// shifts s = step · g, g signed and stored at fft_position(g).
void fill_products(const WaveField& psi, const IVec& q, int step, const std::vector<int>& shape,
                   std::vector<cplx>& buf) {
  const BoxGrid& box = psi.grid();
  const auto nodes = box.shape();
  const auto& s = psi.samples();
  std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
  const int d = box.dim();
  for (std::size_t f = 0; f < buf.size(); ++f) {
    const IVec pos = unflatten(f, shape);
    IVec a(d), b(d);
    for (int j = 0; j < d; ++j) {
      const int g = fft_frequency(pos[j], shape[static_cast<std::size_t>(j)]);
      a[j] = q[j] + g * step;
      b[j] = q[j] - g * step;
    }
    if (!inside(a, nodes) || !inside(b, nodes)) continue;
    buf[f] = std::conj(s[box.flat(a)]) * s[box.flat(b)];
  }
}

double transform_prefactor(const BoxGrid& box) {
  const int d = box.dim();
  return std::pow(2.0, d) * box.cell_element() / std::pow(kTwoPi * box.epsilon, d);
}

}  // namespace

std::vector<double> wigner_row(const WaveField& psi, std::size_t q_flat) {
  const BoxGrid& box = psi.grid();
  const auto shape = box.shape();
  FftPlan plan(shape, FFTW_BACKWARD);
  std::vector<cplx> buf(box.size());
  fill_products(psi, box.node(q_flat), 1, shape, buf);
  plan.execute(buf);
  const double c = transform_prefactor(box);
  std::vector<double> row(buf.size());
  for (std::size_t f = 0; f < buf.size(); ++f) {
    IVec m = unflatten(f, shape);
    for (int j = 0; j < m.size(); ++j) {
      const int n = shape[static_cast<std::size_t>(j)];
      m[j] = fft_frequency(m[j], n) + n / 2;
    }
    row[flatten(m, shape)] = c * buf[f].real();
  }
  return row;
}

WignerGrid wigner_transform(const WaveField& psi, int threads) {
  const BoxGrid& box = psi.grid();
  const auto shape = box.shape();
  WignerGrid w;
  w.box = box;
  w.p_shape = shape;
  const std::size_t nq = box.size();
  const std::size_t np = w.p_size();
  w.values.assign(nq * np, 0.0);
  const double c = transform_prefactor(box);

  // Target slot of each FFT output position.
  std::vector<std::size_t> target(np);
  for (std::size_t f = 0; f < np; ++f) {
    IVec m = unflatten(f, shape);
    for (int j = 0; j < m.size(); ++j) {
      const int n = shape[static_cast<std::size_t>(j)];
      m[j] = fft_frequency(m[j], n) + n / 2;
    }
    target[f] = flatten(m, shape);
  }

  FftPlan plan(shape, FFTW_BACKWARD);
  const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::vector<cplx>> buffers(workers, std::vector<cplx>(np));
  std::vector<double> max_abs(workers, 0.0), max_im(workers, 0.0);
  parallel_for(workers, threads, [&](std::size_t wk) {
    auto& buf = buffers[wk];
    for (std::size_t q = wk; q < nq; q += workers) {
      fill_products(psi, box.node(q), 1, shape, buf);
      plan.execute(buf);
      double* row = &w.values[q * np];
      for (std::size_t f = 0; f < np; ++f) {
        row[target[f]] = c * buf[f].real();
        max_abs[wk] = std::max(max_abs[wk], std::abs(c * buf[f].real()));
        max_im[wk] = std::max(max_im[wk], std::abs(c * buf[f].imag()));
      }
    }
  });
  const double big = *std::max_element(max_abs.begin(), max_abs.end());
  const double im = *std::max_element(max_im.begin(), max_im.end());
  if (im > 1e-10 * big) {
    throw Error(ErrorKind::Aliasing, "Wigner transform has imaginary residue " + std::to_string(im) +
                                         " against max |w| = " + std::to_string(big));
  }
  return w;
}

ReducedWigner wigner_series(const WaveField& psi, int threads) {
  const BoxGrid& box = psi.grid();
  for (int c : box.cells) {
    if (c % 2 != 0) {
      throw Error(ErrorKind::GridAlignment, "reduced Wigner series needs an even number of cells per axis");
    }
  }
  ReducedWigner w;
  w.box = box;
  for (int c : box.cells) w.k_shape.push_back(2 * c);
  const std::size_t nr = box.size();
  const std::size_t nk = w.k_size();
  w.values.assign(nr * nk, 0.0);
  const double c = 1.0 / box.lattice.bz_volume();
  const int step = box.points_per_cell / 2;

  FftPlan plan(w.k_shape, FFTW_BACKWARD);
  const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::vector<cplx>> buffers(workers, std::vector<cplx>(nk));
  std::vector<double> max_abs(workers, 0.0), max_im(workers, 0.0);
  parallel_for(workers, threads, [&](std::size_t wk) {
    auto& buf = buffers[wk];
    for (std::size_t r = wk; r < nr; r += workers) {
      fill_products(psi, box.node(r), step, w.k_shape, buf);
      plan.execute(buf);
      double* row = &w.values[r * nk];
      for (std::size_t f = 0; f < nk; ++f) {
        row[f] = c * buf[f].real();
        max_abs[wk] = std::max(max_abs[wk], std::abs(row[f]));
        max_im[wk] = std::max(max_im[wk], std::abs(c * buf[f].imag()));
      }
    }
  });
  const double big = *std::max_element(max_abs.begin(), max_abs.end());
  const double im = *std::max_element(max_im.begin(), max_im.end());
  if (im > 1e-10 * big) {
    throw Error(ErrorKind::Aliasing, "reduced Wigner series has imaginary residue " + std::to_string(im));
  }
  return w;
}

ReducedWigner fold_wigner(const WignerGrid& w) {
  ReducedWigner r;
  r.box = w.box;
  const int d = w.box.dim();
  for (int j = 0; j < d; ++j) {
    const int zone = 2 * w.box.cells[static_cast<std::size_t>(j)];
    if (w.p_shape[static_cast<std::size_t>(j)] % zone != 0) {
      throw Error(ErrorKind::Folding, "momentum grid does not hold a whole number of zones");
    }
    r.k_shape.push_back(zone);
  }
  const std::size_t nq = w.box.size();
  const std::size_t np = w.p_size();
  const std::size_t nk = r.k_size();
  r.values.assign(nq * nk, 0.0);
  std::vector<std::size_t> slot(np);
  for (std::size_t p = 0; p < np; ++p) {
    IVec m = w.p_mode(p);
    for (int j = 0; j < d; ++j) m[j] = fft_position(m[j], r.k_shape[static_cast<std::size_t>(j)]);
    slot[p] = flatten(m, r.k_shape);
  }
  // Each copy carries dp = dk / (number of copies); the sum of values is the fold.
  for (std::size_t q = 0; q < nq; ++q) {
    const double* in = &w.values[q * np];
    double* out = &r.values[q * nk];
    for (std::size_t p = 0; p < np; ++p) out[slot[p]] += in[p];
  }
  return r;
}

Marginals marginals(const WignerGrid& w) {
  Marginals m;
  const std::size_t nq = w.box.size();
  const std::size_t np = w.p_size();
  const double dv = w.box.cell_element();
  const double dp = w.p_element();
  m.position.assign(nq, 0.0);
  m.momentum.assign(np, 0.0);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t p = 0; p < np; ++p) {
      const double v = w.values[q * np + p];
      m.position[q] += v * dp;
      m.momentum[p] += v * dv;
    }
  }
  for (double v : m.position) m.total += v * dv;
  return m;
}

double l2_norm(const WignerGrid& w) {
  double s = 0.0;
  for (double v : w.values) s += v * v;
  return std::sqrt(s * w.box.cell_element() * w.p_element());
}

// -- pairing -------------------------------------------------------------------------------

double weyl_expectation(const WaveField& psi, const PeriodicObservable& a) {
  const BoxGrid& box = psi.grid();
  const auto nodes = box.shape();
  const auto& s = psi.samples();
  const int d = box.dim();
  const int half = box.points_per_cell / 2;
  cplx acc(0.0, 0.0);
  for (const ObservableTerm& t : a.terms()) {
    for (std::size_t f = 0; f < s.size(); ++f) {
      const IVec x = box.node(f);
      IVec mid(d), end(d);
      for (int j = 0; j < d; ++j) {
        mid[j] = x[j] + t.gamma[j] * half;
        end[j] = x[j] + t.gamma[j] * box.points_per_cell;
      }
      if (!inside(end, nodes)) continue;
      acc += std::conj(s[f]) * t.coefficient(box.position(box.flat(mid))) * s[box.flat(end)];
    }
  }
  return acc.real() * box.cell_element();
}

double pair_reduced(const ReducedWigner& w, const std::function<double(const Vec&, const Vec&)>& symbol, int threads,
                    double skip) {
  const std::size_t nr = w.box.size();
  const std::size_t nk = w.k_size();
  const double el = w.box.cell_element() * w.k_element();
  std::vector<double> rows(nr, 0.0);
  parallel_for(nr, threads, [&](std::size_t r) {
    const Vec x = w.box.position(r);
    double acc = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      const double v = w.values[r * nk + k];
      if (std::abs(v) * el < skip) continue;
      acc += symbol(x, w.momentum(k)) * v;
    }
    rows[r] = acc * el;
  });
  double s = 0.0;
  for (double v : rows) s += v;
  return s;
}

double pair_reduced(const ReducedWigner& w, const PeriodicObservable& a) {
  return pair_reduced(w, [&](const Vec& r, const Vec& k) { return a.value(r, k); });
}

double pair_wigner(const WignerGrid& w, const std::function<double(const Vec&, const Vec&)>& symbol, int threads,
                   double skip) {
  const std::size_t nq = w.box.size();
  const std::size_t np = w.p_size();
  const double el = w.box.cell_element() * w.p_element();
  std::vector<double> rows(nq, 0.0);
  parallel_for(nq, threads, [&](std::size_t q) {
    const Vec x = w.box.position(q);
    double acc = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double v = w.values[q * np + p];
      if (std::abs(v) * el < skip) continue;
      acc += symbol(x, w.momentum(p)) * v;
    }
    rows[q] = acc * el;
  });
  double s = 0.0;
  for (double v : rows) s += v;
  return s;
}

PairingResult pair_observable(const WaveField& psi, const PeriodicObservable& a, int threads) {
  PairingResult r;
  r.shift = weyl_expectation(psi, a);
  r.grid = pair_reduced(wigner_series(psi, threads), a);
  if (std::abs(r.shift - r.grid) > 1e-4 * std::max(1.0, std::abs(r.shift))) {
    throw Error(ErrorKind::Inconsistency, "observable pairing: shift form " + std::to_string(r.shift) +
                                              " against grid form " + std::to_string(r.grid));
  }
  return r;
}

double l1_distance(const ReducedWigner& a, const ReducedWigner& b) {
  check_same_grid(a.box, b.box);
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.box.cell_element() * a.k_element();
}

double l1_distance(const WignerGrid& a, const WignerGrid& b) {
  check_same_grid(a.box, b.box);
  if (a.p_shape != b.p_shape) throw Error(ErrorKind::Config, "Wigner momentum grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.box.cell_element() * a.p_element();
}

// -- export ------------------------------------------------------------------------------------

namespace {
void write_header(std::ostream& out, int d, const char* mom) {
  for (int j = 0; j < d; ++j) out << (j == 0 ? "x" : "y") << ',';
  for (int j = 0; j < d; ++j) out << mom << '_' << (j == 0 ? "x" : "y") << ',';
  out << "w\n";
}
}  // namespace

void write_wigner_csv(std::ostream& out, const WignerGrid& w) {
  const int d = w.box.dim();
  out.precision(12);
  out << "# wigner epsilon=" << w.box.epsilon << '\n';
  write_header(out, d, "p");
  const std::size_t np = w.p_size();
  for (std::size_t q = 0; q < w.box.size(); ++q) {
    const Vec x = w.box.position(q);
    for (std::size_t p = 0; p < np; ++p) {
      const Vec k = w.momentum(p);
      for (int j = 0; j < d; ++j) out << x[j] << ',';
      for (int j = 0; j < d; ++j) out << k[j] << ',';
      out << w.values[q * np + p] << '\n';
    }
  }
}

void write_reduced_csv(std::ostream& out, const ReducedWigner& w) {
  const int d = w.box.dim();
  out.precision(12);
  out << "# reduced_wigner epsilon=" << w.box.epsilon << '\n';
  write_header(out, d, "k");
  const std::size_t nk = w.k_size();
  for (std::size_t r = 0; r < w.box.size(); ++r) {
    const Vec x = w.box.position(r);
    for (std::size_t k = 0; k < nk; ++k) {
      const Vec kk = w.momentum(k);
      for (int j = 0; j < d; ++j) out << x[j] << ',';
      for (int j = 0; j < d; ++j) out << kk[j] << ',';
      out << w.values[r * nk + k] << '\n';
    }
  }
}

}  // namespace semicl

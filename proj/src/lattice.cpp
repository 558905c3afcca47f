#include "semicl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "semicl/errors.hpp"

namespace semicl {

Mat dual_lattice(const Mat& basis) {
  const int d = static_cast<int>(basis.cols());
  if (d < 1 || d > kMaxDim || basis.rows() != d) {
    throw Error(ErrorKind::UnsupportedDimension, "lattice basis must be d×d with d in {1,2}");
  }
  const double det = basis.determinant();
  double scale = 1.0;
  for (int j = 0; j < d; ++j) scale *= std::max(basis.col(j).norm(), 1e-300);
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * scale) {
    throw Error(ErrorKind::DegenerateLattice, "basis vectors are linearly dependent");
  }
  // Columns of B* solve Aᵀ B* = 2π I.
  Mat dual = kTwoPi * basis.transpose().inverse();
  return dual;
}

Lattice::Lattice(const Mat& basis) : basis_(basis), dual_(dual_lattice(basis)) {
  dual_inverse_ = dual_.inverse();
  cell_volume_ = std::abs(basis_.determinant());
  bz_volume_ = std::pow(kTwoPi, dim()) / cell_volume_;
}

Lattice Lattice::cubic(int dim, double spacing) {
  Mat basis = Mat::Identity(dim, dim) * spacing;
  return Lattice(basis);
}

Vec Lattice::lattice_vector(const IVec& n) const { return basis_ * n.cast<double>(); }

Vec Lattice::dual_vector(const IVec& n) const { return dual_ * n.cast<double>(); }

Vec Lattice::to_fractional_k(const Vec& k) const { return dual_inverse_ * k; }

Vec Lattice::fold_to_zone(const Vec& k) const {
  Vec f = to_fractional_k(k);
  for (int i = 0; i < f.size(); ++i) f[i] -= std::floor(f[i] + 0.5);
  return dual_ * f;
}

// ---------------------------------------------------------------------------

FourierPotential::FourierPotential(Lattice lattice, CoefficientMap coefficients)
    : lattice_(std::move(lattice)) {
  const int d = lattice_.dim();
  for (const auto& [key, value] : coefficients) {
    for (int i = d; i < kMaxDim; ++i) {
      if (key[static_cast<std::size_t>(i)] != 0) {
        throw Error(ErrorKind::Config, "potential coefficient index has too many components");
      }
    }
    if (value != cplx(0.0, 0.0)) coefficients_.emplace(key, value);
  }
  for (const auto& [key, value] : coefficients_) {
    IndexKey neg{-key[0], -key[1]};
    auto it = coefficients_.find(neg);
    const cplx partner = it == coefficients_.end() ? cplx(0.0, 0.0) : it->second;
    if (std::abs(partner - std::conj(value)) > 1e-12 * std::max(1.0, std::abs(value))) {
      std::ostringstream msg;
      msg << "reality condition violated for G index (" << key[0];
      if (d > 1) msg << ", " << key[1];
      msg << "): V(-G) must equal conj V(G)";
      throw Error(ErrorKind::Config, msg.str());
    }
  }
}

cplx FourierPotential::coefficient(const IVec& g_index) const {
  auto it = coefficients_.find(to_key(g_index));
  return it == coefficients_.end() ? cplx(0.0, 0.0) : it->second;
}

double FourierPotential::value(const Vec& y) const {
  cplx sum(0.0, 0.0);
  for (const auto& [key, c] : coefficients_) {
    const Vec g = lattice_.dual_vector(from_key(key, dim()));
    sum += c * std::exp(cplx(0.0, g.dot(y)));
  }
  return sum.real();
}

int FourierPotential::max_index() const {
  int m = 0;
  for (const auto& [key, c] : coefficients_) m = std::max({m, std::abs(key[0]), std::abs(key[1])});
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<IVec> enumerate_indices(const Lattice& lattice, double cutoff) {
  const int d = lattice.dim();
  std::array<int, kMaxDim> range{0, 0};
  for (int i = 0; i < d; ++i) {
    // n_i = G·γ_i / 2π, so |n_i| <= |G| |γ_i| / 2π.
    range[static_cast<std::size_t>(i)] =
        static_cast<int>(std::ceil(cutoff * lattice.basis().col(i).norm() / kTwoPi)) + 1;
  }
  std::vector<IVec> out;
  const int r0 = range[0];
  const int r1 = d > 1 ? range[1] : 0;
  for (int a = -r0; a <= r0; ++a) {
    for (int b = -r1; b <= r1; ++b) {
      IVec n(d);
      n[0] = a;
      if (d > 1) n[1] = b;
      if (lattice.dual_vector(n).norm() <= cutoff * (1.0 + 1e-12) + 1e-12) out.push_back(n);
    }
  }
  return out;
}

}  // namespace

PlaneWaveBasis::PlaneWaveBasis(const Lattice& lattice, double cutoff)
    : lattice_(lattice), indices_(enumerate_indices(lattice, cutoff)), cutoff_(cutoff) {
  if (!(cutoff >= 0.0)) throw Error(ErrorKind::Config, "plane-wave cutoff must be non-negative");
  finalize();
}

PlaneWaveBasis::PlaneWaveBasis(const Lattice& lattice, std::vector<IVec> indices)
    : lattice_(lattice), indices_(std::move(indices)) {
  finalize();
  for (const IVec& n : indices_) {
    if (find(IVec(-n)) < 0) throw Error(ErrorKind::Config, "plane-wave basis not closed under negation");
  }
  if (find(IVec::Zero(lattice_.dim())) < 0) {
    throw Error(ErrorKind::Config, "plane-wave basis must contain G = 0");
  }
  for (const Vec& g : g_vectors_) cutoff_ = std::max(cutoff_, g.norm());
}

void PlaneWaveBasis::finalize() {
  const Lattice& lat = lattice_;
  std::stable_sort(indices_.begin(), indices_.end(), [&lat](const IVec& a, const IVec& b) {
    const double na = lat.dual_vector(a).norm();
    const double nb = lat.dual_vector(b).norm();
    if (std::abs(na - nb) > 1e-12 * std::max(1.0, na)) return na < nb;
    return to_key(a) < to_key(b);
  });
  g_vectors_.clear();
  lookup_.clear();
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    g_vectors_.push_back(lattice_.dual_vector(indices_[i]));
    lookup_.emplace(to_key(indices_[i]), static_cast<int>(i));
  }
}

PlaneWaveBasis PlaneWaveBasis::for_bands(const Lattice& lattice, int n_bands, int extra_shells) {
  double trial = lattice.dual_basis().colwise().norm().maxCoeff();
  for (;;) {
    std::vector<IVec> idx = enumerate_indices(lattice, trial);
    std::vector<double> norms;
    for (const IVec& n : idx) norms.push_back(lattice.dual_vector(n).norm());
    std::sort(norms.begin(), norms.end());
    std::vector<double> shells;
    for (double v : norms) {
      if (shells.empty() || v > shells.back() * (1.0 + 1e-9) + 1e-12) shells.push_back(v);
    }
    if (static_cast<int>(norms.size()) >= n_bands) {
      const double needed = norms[static_cast<std::size_t>(std::max(n_bands, 1) - 1)];
      auto it = std::lower_bound(shells.begin(), shells.end(), needed * (1.0 - 1e-9));
      const std::size_t pos = static_cast<std::size_t>(it - shells.begin()) +
                              static_cast<std::size_t>(extra_shells);
      // Enumeration is complete for |G| <= trial, so every listed shell is exact.
      if (pos < shells.size()) return PlaneWaveBasis(lattice, shells[pos]);
    }
    trial *= 1.5;
  }
}

int PlaneWaveBasis::find(const IVec& index) const {
  auto it = lookup_.find(to_key(index));
  return it == lookup_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXcd bloch_hamiltonian(const Vec& k, const FourierPotential& potential,
                                   const PlaneWaveBasis& basis) {
  const int n = basis.size();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  const auto& idx = basis.indices();
  const auto& gv = basis.g_vectors();
  for (int i = 0; i < n; ++i) {
    h(i, i) += 0.5 * (k + gv[static_cast<std::size_t>(i)]).squaredNorm();
  }
  if (potential.is_zero()) return h;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const IVec diff = idx[static_cast<std::size_t>(i)] - idx[static_cast<std::size_t>(j)];
      h(i, j) += potential.coefficient(diff);
    }
  }
  return h;
}

namespace {

bool lexicographic_less(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

}  // namespace

BlochFiber solve_fiber(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                       int n_bands) {
  const int n = basis.size();
  if (n_bands <= 0) n_bands = n;
  if (n_bands > n) {
    throw Error(ErrorKind::Config, "requested " + std::to_string(n_bands) +
                                       " bands but the plane-wave basis has " + std::to_string(n));
  }
  const Eigen::MatrixXcd h = bloch_hamiltonian(k, potential, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge at k = (" << k.transpose() << "), cutoff " << basis.cutoff();
    throw Error(ErrorKind::EigenSolver, msg.str());
  }

  Eigen::MatrixXcd vecs = solver.eigenvectors();
  const Eigen::VectorXd& vals = solver.eigenvalues();
  for (int b = 0; b < n; ++b) {
    Eigen::Index imax = 0;
    vecs.col(b).cwiseAbs().maxCoeff(&imax);
    const cplx pivot = vecs(imax, b);
    vecs.col(b) *= std::conj(pivot) / std::abs(pivot);
    vecs(imax, b) = cplx(std::abs(vecs(imax, b)), 0.0);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  int start = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && vals[stop] - vals[stop - 1] <= 1e-12 * std::max(1.0, std::abs(vals[stop]))) ++stop;
    if (stop - start > 1) {
      std::sort(order.begin() + start, order.begin() + stop, [&vecs](int a, int b) {
        return lexicographic_less(vecs.col(a), vecs.col(b));
      });
    }
    start = stop;
  }

  BlochFiber fiber;
  fiber.k = k;
  fiber.energies.resize(n_bands);
  fiber.vectors.resize(n, n_bands);
  for (int b = 0; b < n_bands; ++b) {
    fiber.energies[b] = vals[order[static_cast<std::size_t>(b)]];
    fiber.vectors.col(b) = vecs.col(order[static_cast<std::size_t>(b)]);
  }
  return fiber;
}

double min_gap(int band, const FourierPotential& potential, const PlaneWaveBasis& basis,
               const std::vector<Vec>& k_points, double threshold) {
  if (band < 1) throw Error(ErrorKind::Config, "band numbers start at 1");
  double gap = std::numeric_limits<double>::infinity();
  Vec worst;
  for (const Vec& k : k_points) {
    const BlochFiber fiber = solve_fiber(k, potential, basis, band + 1);
    double local = fiber.energy(band + 1) - fiber.energy(band);
    if (band > 1) local = std::min(local, fiber.energy(band) - fiber.energy(band - 1));
    if (local < gap) {
      gap = local;
      worst = k;
    }
  }
  if (gap < threshold) {
    std::ostringstream msg;
    msg << "band " << band << " gap " << gap << " below threshold " << threshold << " at k = ("
        << worst.transpose() << ")";
    throw Error(ErrorKind::GapClosure, msg.str());
  }
  return gap;
}

std::vector<Vec> brillouin_grid(const Lattice& lattice, const std::vector<int>& n) {
  const int d = lattice.dim();
  if (static_cast<int>(n.size()) != d) throw Error(ErrorKind::Config, "grid rank does not match lattice");
  std::vector<Vec> out;
  const int n0 = n[0];
  const int n1 = d > 1 ? n[1] : 1;
  for (int a = 0; a < n0; ++a) {
    for (int b = 0; b < n1; ++b) {
      Vec f(d);
      f[0] = static_cast<double>(a) / n0;
      if (d > 1) f[1] = static_cast<double>(b) / n1;
      out.push_back(lattice.dual_basis() * f);
    }
  }
  return out;
}

}  // namespace semicl

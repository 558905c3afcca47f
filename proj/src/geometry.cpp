#include "semicl/geometry.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semicl/errors.hpp"
#include "semicl/fft.hpp"
#include "semicl/parallel.hpp"

namespace semicl {

ZoneWrap plane_wave_wrap(const PlaneWaveBasis& basis) {
  return [&basis](const Eigen::VectorXcd& c, const IVec& wrap) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
    const auto& idx = basis.indices();
    for (int g = 0; g < basis.size(); ++g) {
      const int src = basis.find(IVec(idx[static_cast<std::size_t>(g)] + wrap));
      if (src >= 0) out[g] = c[src];
    }
    return out;
  };
}

ZoneWrap periodic_gauge_wrap() {
  return [](const Eigen::VectorXcd& c, const IVec&) { return c; };
}

double PlaquetteField::curvature(int i, int j) const {
  return flux[static_cast<std::size_t>(i * n[1] + j)] / plaquette_area;
}

Vec PlaquetteField::centre(int i, int j) const {
  Vec f(2);
  f << (i + 0.5) / n[0], (j + 0.5) / n[1];
  return f;
}

double PlaquetteField::total_flux() const {
  double s = 0.0;
  for (double f : flux) s += f;  // fixed order keeps the sum deterministic
  return s;
}

PlaquetteField berry_curvature_plaquette(const std::vector<BlochFiber>& fibers, const Lattice& lattice,
                                         const std::vector<int>& n, int band, const ZoneWrap& wrap) {
  PlaquetteField field;
  field.lattice = lattice;
  field.band = band;
  field.n = n;
  if (lattice.dim() == 1) return field;
  if (lattice.dim() != 2 || n.size() != 2) {
    throw Error(ErrorKind::UnsupportedDimension, "plaquette curvature needs a 2D grid");
  }
  const int n1 = n[0], n2 = n[1];
  if (static_cast<int>(fibers.size()) != n1 * n2) {
    throw Error(ErrorKind::Config, "fiber count does not match the grid");
  }
  const double det = lattice.dual_basis().determinant();
  field.plaquette_area = std::abs(det) / (n1 * n2);
  const double orientation = det > 0.0 ? 1.0 : -1.0;

  auto at = [&](int i, int j) -> Eigen::VectorXcd {
    const int wi = i >= n1 ? 1 : 0;
    const int wj = j >= n2 ? 1 : 0;
    const Eigen::VectorXcd& v = fibers[static_cast<std::size_t>((i % n1) * n2 + (j % n2))].vectors.col(band - 1);
    if (wi == 0 && wj == 0) return v;
    IVec w(2);
    w << wi, wj;
    return wrap(v, w);
  };

  const std::size_t count = static_cast<std::size_t>(n1 * n2);
  std::vector<cplx> link1(count), link2(count);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      const Eigen::VectorXcd u = at(i, j);
      const cplx o1 = u.dot(at(i + 1, j));
      const cplx o2 = u.dot(at(i, j + 1));
      if (std::abs(o1) < 1e-10 || std::abs(o2) < 1e-10) {
        std::ostringstream msg;
        msg << "vanishing link overlap at grid point (" << i << ", " << j << ") for band " << band;
        throw Error(ErrorKind::GridTooCoarse, msg.str());
      }
      link1[static_cast<std::size_t>(i * n2 + j)] = o1 / std::abs(o1);
      link2[static_cast<std::size_t>(i * n2 + j)] = o2 / std::abs(o2);
    }
  }
  field.flux.resize(count);
  field.link_phase_1.resize(count);
  field.link_phase_2.resize(count);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t s = static_cast<std::size_t>(i * n2 + j);
      const std::size_t right = static_cast<std::size_t>(((i + 1) % n1) * n2 + j);
      const std::size_t up = static_cast<std::size_t>(i * n2 + (j + 1) % n2);
      // k -> k+δ₁ -> k+δ₁+δ₂ -> k+δ₂ -> k; the Berry phase of a positively
      // oriented loop is minus the enclosed flux of Ω₁₂.
      const cplx loop = link1[s] * link2[right] * std::conj(link1[up]) * std::conj(link2[s]);
      field.flux[s] = -orientation * std::arg(loop);
      field.link_phase_1[s] = std::arg(link1[s]);
      field.link_phase_2[s] = std::arg(link2[s]);
    }
  }
  return field;
}

ChernResult chern_number(const PlaquetteField& field) {
  if (field.lattice.dim() != 2) throw Error(ErrorKind::UnsupportedDimension, "Chern numbers need d = 2");
  ChernResult out;
  out.raw = field.total_flux() / kTwoPi;
  out.chern = static_cast<int>(std::lround(out.raw));
  out.residual = std::abs(out.raw - out.chern);
  if (out.residual > 1e-3) {
    std::ostringstream msg;
    msg << "plaquette sum " << out.raw << " is not close to an integer (grid too coarse or gap closing)";
    throw Error(ErrorKind::NonQuantized, msg.str());
  }
  return out;
}

Vec hall_current(const PlaquetteField& field, const Vec& electric_field) {
  if (field.lattice.dim() != 2 || electric_field.size() != 2) {
    throw Error(ErrorKind::UnsupportedDimension, "the Hall current is defined for d = 2");
  }
  const ChernResult c = chern_number(field);
  Vec perp(2);
  perp << -electric_field[1], electric_field[0];
  return -perp * (kTwoPi * c.chern);
}

// ---------------------------------------------------------------------------

namespace {

/// ⟨n|∂_iH|m⟩ for every m < n_sum, one row per direction.
Eigen::MatrixXcd velocity_row(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum) {
  const int d = basis.lattice().dim();
  const int ng = basis.size();
  Eigen::MatrixXcd out(d, n_sum);
  const Eigen::VectorXcd un = fiber.vectors.col(band - 1);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXcd weighted(ng);
    for (int g = 0; g < ng; ++g) {
      weighted[g] = un[g] * (fiber.k[i] + basis.g_vectors()[static_cast<std::size_t>(g)][i]);
    }
    // ⟨n|∂_iH|m⟩ = Σ_G conj(c_n(G)) (k+G)_i c_m(G)
    out.row(i) = (fiber.vectors.leftCols(n_sum).adjoint() * weighted).conjugate().transpose();
  }
  return out;
}

void check_sum_args(const BlochFiber& fiber, int band, int n_sum) {
  if (band < 1 || band > fiber.bands()) throw Error(ErrorKind::Config, "band outside the solved fiber");
  if (n_sum > fiber.bands()) {
    throw Error(ErrorKind::Config, "sum-over-states needs " + std::to_string(n_sum) +
                                       " bands but the fiber holds " + std::to_string(fiber.bands()));
  }
}

template <typename Weight>
Mat sum_over_states(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum,
                    double degeneracy, Weight weight) {
  check_sum_args(fiber, band, n_sum);
  const int d = basis.lattice().dim();
  Mat out = Mat::Zero(d, d);
  if (d == 1) return out;
  const Eigen::MatrixXcd v = velocity_row(fiber, basis, band, n_sum);
  const double en = fiber.energy(band);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      double acc = 0.0;
      for (int m = 0; m < n_sum; ++m) {
        if (m == band - 1) continue;
        const double diff = en - fiber.energies[m];
        if (std::abs(diff) < degeneracy) {
          std::ostringstream msg;
          msg << "|E_" << m + 1 << " - E_" << band << "| = " << std::abs(diff) << " at k = ("
              << fiber.k.transpose() << ")";
          throw Error(ErrorKind::DegenerateDenominator, msg.str());
        }
        // ⟨n|∂_iH|m⟩⟨m|∂_jH|n⟩ with ⟨m|∂_jH|n⟩ = conj ⟨n|∂_jH|m⟩
        const cplx x = v(i, m) * std::conj(v(j, m));
        acc += weight(x, diff);
      }
      out(i, j) = acc;
      out(j, i) = -acc;
    }
  }
  return out;
}

int default_n_sum(int band, int available, const SumOverStatesOptions& options) {
  const int n = options.n_sum > 0 ? options.n_sum : 4 * band;
  return std::min(std::max(n, band + 1), available);
}

template <typename Compute>
Mat converged_sum(const BlochFiber& fiber, int band, const SumOverStatesOptions& options, Compute compute) {
  int n_sum = default_n_sum(band, fiber.bands(), options);
  Mat value = compute(n_sum);
  if (!options.converge) return value;
  while (n_sum < fiber.bands()) {
    const int next = std::min(2 * n_sum, fiber.bands());
    const Mat refined = compute(next);
    const double change = (refined - value).cwiseAbs().maxCoeff();
    value = refined;
    n_sum = next;
    if (change <= options.tolerance * std::max(1.0, value.cwiseAbs().maxCoeff())) break;
  }
  return value;
}

}  // namespace

Mat berry_curvature_sos(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum,
                        double degeneracy) {
  return sum_over_states(fiber, basis, band, n_sum, degeneracy,
                         [](cplx x, double diff) { return -2.0 * x.imag() / (diff * diff); });
}

Mat magnetic_moment_sos(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum,
                        double degeneracy) {
  return sum_over_states(fiber, basis, band, n_sum, degeneracy,
                         [](cplx x, double diff) { return 0.5 * x.imag() / diff; });
}

Mat berry_curvature_sos(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                        int band, const SumOverStatesOptions& options) {
  const BlochFiber fiber = solve_fiber(k, potential, basis);
  return converged_sum(fiber, band, options, [&](int n) {
    return berry_curvature_sos(fiber, basis, band, n, options.degeneracy);
  });
}

Mat magnetic_moment_sos(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                        int band, const SumOverStatesOptions& options) {
  const BlochFiber fiber = solve_fiber(k, potential, basis);
  return converged_sum(fiber, band, options, [&](int n) {
    return magnetic_moment_sos(fiber, basis, band, n, options.degeneracy);
  });
}

// ---------------------------------------------------------------------------

std::vector<Vec> spectral_gradient(const Lattice& lattice, const std::vector<int>& n,
                                   const std::vector<double>& samples) {
  const int d = lattice.dim();
  std::size_t total = 1;
  for (int v : n) total *= static_cast<std::size_t>(v);
  if (samples.size() != total) throw Error(ErrorKind::Config, "sample count does not match the grid");

  std::vector<cplx> spectrum(samples.begin(), samples.end());
  FftPlan forward(n, FFTW_FORWARD);
  FftPlan backward(n, FFTW_BACKWARD);
  forward.execute(spectrum);

  std::vector<std::vector<double>> dfrac(static_cast<std::size_t>(d), std::vector<double>(total));
  const int n1 = d > 1 ? n[1] : 1;
  for (int axis = 0; axis < d; ++axis) {
    std::vector<cplx> work(total);
    for (std::size_t s = 0; s < total; ++s) {
      const int idx = axis == 0 ? static_cast<int>(s) / n1 : static_cast<int>(s) % n1;
      const int len = n[static_cast<std::size_t>(axis)];
      const int freq = fft_frequency(idx, len);
      const bool nyquist = len % 2 == 0 && idx == len / 2;
      work[s] = nyquist ? cplx(0.0, 0.0) : spectrum[s] * cplx(0.0, kTwoPi * freq);
    }
    backward.execute(work);
    for (std::size_t s = 0; s < total; ++s) {
      dfrac[static_cast<std::size_t>(axis)][s] = work[s].real() / static_cast<double>(total);
    }
  }
  // k = B* f, so ∇_k = (B*)^{-T} ∇_f.
  const Mat jac = lattice.dual_basis().transpose().inverse();
  std::vector<Vec> grad(total);
  for (std::size_t s = 0; s < total; ++s) {
    Vec df(d);
    for (int a = 0; a < d; ++a) df[a] = dfrac[static_cast<std::size_t>(a)][s];
    grad[s] = jac * df;
  }
  return grad;
}

GeometryGrid build_geometry_grid(const FourierPotential& potential, const PlaneWaveBasis& basis, int band,
                                 const std::vector<int>& n, const GeometryOptions& options) {
  GeometryGrid grid;
  grid.lattice = potential.lattice();
  grid.band = band;
  grid.n = n;
  grid.k_points = brillouin_grid(grid.lattice, n);
  const std::size_t count = grid.k_points.size();
  const int d = grid.lattice.dim();

  std::vector<BlochFiber> fibers(count);
  parallel_for(count, options.threads, [&](std::size_t s) {
    fibers[s] = solve_fiber(grid.k_points[s], potential, basis);
  });

  grid.min_gap = std::numeric_limits<double>::infinity();
  for (const BlochFiber& f : fibers) {
    double gap = f.energy(band + 1) - f.energy(band);
    if (band > 1) gap = std::min(gap, f.energy(band) - f.energy(band - 1));
    grid.min_gap = std::min(grid.min_gap, gap);
  }
  if (grid.min_gap < options.gap_threshold) {
    std::ostringstream msg;
    msg << "band " << band << " is not isolated on the grid: min gap " << grid.min_gap;
    throw Error(ErrorKind::GapClosure, msg.str());
  }

  grid.energy.resize(count);
  grid.curvature.assign(count, Mat::Zero(d, d));
  grid.moment.assign(count, Mat::Zero(d, d));
  for (std::size_t s = 0; s < count; ++s) grid.energy[s] = fibers[s].energy(band);
  grid.grad_energy = spectral_gradient(grid.lattice, n, grid.energy);

  if (d == 2) {
    parallel_for(count, options.threads, [&](std::size_t s) {
      const BlochFiber& f = fibers[s];
      grid.curvature[s] = converged_sum(f, band, options.sos, [&](int m) {
        return berry_curvature_sos(f, basis, band, m, options.sos.degeneracy);
      });
      grid.moment[s] = converged_sum(f, band, options.sos, [&](int m) {
        return magnetic_moment_sos(f, basis, band, m, options.sos.degeneracy);
      });
    });
    grid.plaquettes = berry_curvature_plaquette(fibers, grid.lattice, n, band, plane_wave_wrap(basis));
  }
  return grid;
}

// ---------------------------------------------------------------------------

Lattice hofstadter_lattice(int q) {
  Mat basis = Mat::Zero(2, 2);
  basis(0, 0) = q;
  basis(1, 1) = 1.0;
  return Lattice(basis);
}

BlochFiber hofstadter_fiber(int p, int q, const Vec& k) {
  if (q < 1 || q > 64 || std::gcd(std::abs(p), q) != 1) {
    throw Error(ErrorKind::InvalidFlux, "flux p/q needs gcd(p, q) = 1 and 1 <= q <= 64, got " +
                                            std::to_string(p) + "/" + std::to_string(q));
  }
  if (k.size() != 2) throw Error(ErrorKind::UnsupportedDimension, "Hofstadter momenta are 2D");
  const double alpha = static_cast<double>(p) / q;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(q, q);
  for (int m = 0; m < q; ++m) {
    h(m, m) += -2.0 * std::cos(k[1] - kTwoPi * alpha * m);
    const int target = (m + 1) % q;
    // Bloch phase only on the hop that leaves the magnetic cell, so that
    // H(k + γ*) = H(k) exactly.
    const cplx phase = m + 1 >= q ? std::exp(cplx(0.0, q * k[0])) : cplx(1.0, 0.0);
    h(target, m) += -phase;
    h(m, target) += -std::conj(phase);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::EigenSolver, "Harper matrix diagonalisation failed");
  BlochFiber fiber;
  fiber.k = k;
  fiber.energies = solver.eigenvalues();
  fiber.vectors = solver.eigenvectors();
  for (int b = 0; b < q; ++b) {
    Eigen::Index imax = 0;
    fiber.vectors.col(b).cwiseAbs().maxCoeff(&imax);
    const cplx pivot = fiber.vectors(imax, b);
    fiber.vectors.col(b) *= std::conj(pivot) / std::abs(pivot);
  }
  return fiber;
}

std::vector<HofstadterBand> hofstadter_chern_table(int p, int q, int n) {
  const Lattice lattice = hofstadter_lattice(q);
  const std::vector<int> dims{n, n};
  const std::vector<Vec> ks = brillouin_grid(lattice, dims);
  std::vector<BlochFiber> fibers;
  fibers.reserve(ks.size());
  for (const Vec& k : ks) fibers.push_back(hofstadter_fiber(p, q, k));
  std::vector<HofstadterBand> table;
  for (int b = 1; b <= q; ++b) {
    HofstadterBand row;
    row.band = b;
    row.e_min = std::numeric_limits<double>::infinity();
    row.e_max = -row.e_min;
    for (const BlochFiber& f : fibers) {
      row.e_min = std::min(row.e_min, f.energy(b));
      row.e_max = std::max(row.e_max, f.energy(b));
    }
    row.chern = chern_number(berry_curvature_plaquette(fibers, lattice, dims, b, periodic_gauge_wrap()));
    table.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------

void write_geometry_csv(std::ostream& out, const GeometryGrid& grid) {
  const int d = grid.dim();
  const char* axes = "xy";
  out << "# band " << grid.band << ", grid";
  for (int v : grid.n) out << ' ' << v;
  out << ", min_gap " << grid.min_gap << '\n';
  for (int i = 0; i < d; ++i) out << 'k' << axes[i] << ',';
  out << "E";
  for (int i = 0; i < d; ++i) out << ",dE_" << axes[i];
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out << ",Omega_" << axes[i] << axes[j];
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out << ",M_" << axes[i] << axes[j];
  out << '\n';
  out.precision(17);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    for (int i = 0; i < d; ++i) out << grid.k_points[s][i] << ',';
    out << grid.energy[s];
    for (int i = 0; i < d; ++i) out << ',' << grid.grad_energy[s][i];
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) out << ',' << grid.curvature[s](i, j);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) out << ',' << grid.moment[s](i, j);
    out << '\n';
  }
}

std::string chern_record_json(const std::string& flux_label, int band, const ChernResult& chern) {
  nlohmann::json j;
  j["flux"] = flux_label;
  j["band"] = band;
  j["chern"] = chern.chern;
  j["raw"] = chern.raw;
  j["residual"] = chern.residual;
  return j.dump();
}

}  // namespace semicl

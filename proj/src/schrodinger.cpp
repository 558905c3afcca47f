#include "semicl/schrodinger.hpp"

#include <cmath>
#include <sstream>

#include "semicl/errors.hpp"
#include "semicl/fft.hpp"

namespace semicl {

void OracleSpec::validate(const BoxGrid& grid) const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "oracle epsilon must be positive");
  if (std::abs(grid.epsilon - epsilon) > 1e-15 * epsilon) {
    throw Error(ErrorKind::Config, "oracle epsilon differs from the grid epsilon");
  }
  if (!(c_stab > 0.0)) throw Error(ErrorKind::Config, "c_stab must be positive");
  if (dt() > c_stab * epsilon * (1.0 + 1e-12)) {
    throw Error(ErrorKind::Config, "dt_micro = " + std::to_string(dt()) + " exceeds c_stab * epsilon = " +
                                       std::to_string(c_stab * epsilon));
  }
  if (fields.has_vector_potential()) {
    throw Error(ErrorKind::Config, "the oracle supports A = 0 or the uniform-B Landau mode only");
  }
  if (uniform_b != 0.0) {
    const Mat& b = grid.lattice.basis();
    if (grid.dim() != 2 || std::abs(b(0, 1)) > 1e-14 || std::abs(b(1, 0)) > 1e-14) {
      throw Error(ErrorKind::Config, "uniform-B mode needs a 2D rectangular lattice");
    }
  }
  if (!potential.is_zero() && potential.lattice().dim() != grid.dim()) {
    throw Error(ErrorKind::Config, "potential and grid dimensions differ");
  }
}

namespace {

// Flat indices of the nodes within `margin` of the box boundary.
std::vector<std::size_t> margin_nodes(const BoxGrid& g, double margin) {
  const Mat inv = g.box_edges().inverse();
  const int d = g.dim();
  Vec height(d);
  for (int j = 0; j < d; ++j) height[j] = 1.0 / inv.row(j).norm();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec f = inv * g.position(i);
    for (int j = 0; j < d; ++j) {
      if (std::min(f[j], 1.0 - f[j]) * height[j] < margin) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

double masked_fraction(const WaveField& psi, const std::vector<std::size_t>& nodes) {
  const auto& s = psi.samples();
  double edge = 0.0, total = 0.0;
  for (const cplx& v : s) total += std::norm(v);
  for (std::size_t i : nodes) edge += std::norm(s[i]);
  return total > 0.0 ? edge / total : 0.0;
}

}  // namespace

double boundary_mass(const WaveField& psi, double margin) {
  return masked_fraction(psi, margin_nodes(psi.grid(), margin));
}

namespace {

std::vector<double> total_potential(const BoxGrid& grid, const OracleSpec& spec) {
  std::vector<double> u = spec.potential.is_zero() ? std::vector<double>(grid.size(), 0.0)
                                                   : lattice_potential_samples(grid, spec.potential);
  if (!spec.fields.phi().empty()) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += spec.fields.scalar_potential(grid.position(i));
  }
  return u;
}

Vec mode_wavevector(const BoxGrid& grid, std::size_t f) {
  const auto shape = grid.shape();
  IVec m = grid.node(f);
  for (int j = 0; j < m.size(); ++j) m[j] = fft_frequency(m[j], shape[static_cast<std::size_t>(j)]);
  return grid.wavevector(m);
}

// Row-major [n0][n1] → [n1][n0] and back.
void transpose(const std::vector<cplx>& in, std::vector<cplx>& out, int n0, int n1) {
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) out[static_cast<std::size_t>(j * n0 + i)] = in[static_cast<std::size_t>(i * n1 + j)];
  }
}

class Stepper {
 public:
  Stepper(const BoxGrid& grid, const OracleSpec& spec, double dt) {
    const auto shape = grid.shape();
    const double eps = spec.epsilon;
    const std::size_t n = grid.size();
    const std::vector<double> u = total_potential(grid, spec);
    half_potential_.resize(n);
    for (std::size_t i = 0; i < n; ++i) half_potential_[i] = std::polar(1.0, -u[i] * dt / (2.0 * eps));
    landau_ = spec.uniform_b != 0.0;
    if (!landau_) {
      forward_ = FftPlan(shape, FFTW_FORWARD);
      backward_ = FftPlan(shape, FFTW_BACKWARD);
      kinetic_.resize(n);
      for (std::size_t f = 0; f < n; ++f) {
        const double xi2 = mode_wavevector(grid, f).squaredNorm();
        kinetic_[f] = std::polar(1.0 / static_cast<double>(n), -eps * xi2 * dt / 2.0);
      }
      return;
    }
    n0_ = shape[0];
    n1_ = shape[1];
    // Axis 0 runs on the transposed layout [n1][n0].
    forward0_ = FftPlan({n0_}, FFTW_FORWARD, n1_);
    backward0_ = FftPlan({n0_}, FFTW_BACKWARD, n1_);
    forward1_ = FftPlan({n1_}, FFTW_FORWARD, n0_);
    backward1_ = FftPlan({n1_}, FFTW_BACKWARD, n0_);
    kinetic0_.resize(n);
    half_kinetic1_.resize(n);
    scratch_.resize(n);
    for (int i = 0; i < n0_; ++i) {
      for (int j = 0; j < n1_; ++j) {
        IVec m(2);
        m << fft_frequency(i, n0_), fft_frequency(j, n1_);
        const Vec xi = grid.wavevector(m);
        kinetic0_[static_cast<std::size_t>(j * n0_ + i)] = std::polar(1.0 / n0_, -eps * xi[0] * xi[0] * dt / 2.0);
        const double x1 = grid.position(static_cast<std::size_t>(i * n1_))[0];
        const double v = eps * xi[1] - spec.uniform_b * x1;
        half_kinetic1_[static_cast<std::size_t>(i * n1_ + j)] = std::polar(1.0 / n1_, -v * v * dt / (4.0 * eps));
      }
    }
  }

  void step(std::vector<cplx>& psi) {
    multiply(psi, half_potential_);
    if (!landau_) {
      forward_.execute(psi);
      multiply(psi, kinetic_);
      backward_.execute(psi);
    } else {
      axis1(psi);
      transpose(psi, scratch_, n0_, n1_);
      forward0_.execute(scratch_);
      multiply(scratch_, kinetic0_);
      backward0_.execute(scratch_);
      transpose(scratch_, psi, n1_, n0_);
      axis1(psi);
    }
    multiply(psi, half_potential_);
  }

 private:
  static void multiply(std::vector<cplx>& a, const std::vector<cplx>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  }
  void axis1(std::vector<cplx>& psi) {
    forward1_.execute(psi);
    multiply(psi, half_kinetic1_);
    backward1_.execute(psi);
  }

  bool landau_ = false;
  int n0_ = 0, n1_ = 0;
  std::vector<cplx> half_potential_, kinetic_, kinetic0_, half_kinetic1_, scratch_;
  FftPlan forward_, backward_, forward0_, backward0_, forward1_, backward1_;
};

}  // namespace

WaveField evolve(const WaveField& psi0, double t_final, const OracleSpec& spec, int checkpoint_every,
                 const Checkpoint& checkpoint) {
  const BoxGrid& grid = psi0.grid();
  spec.validate(grid);
  const double norm0 = psi0.norm_squared();
  if (!(norm0 > 0.0)) throw Error(ErrorKind::Config, "initial state has zero norm");
  const double margin = 5.0 * spec.sigma;
  const std::vector<std::size_t> edge = margin > 0.0 ? margin_nodes(grid, margin) : std::vector<std::size_t>{};
  auto check_boundary = [&](const WaveField& psi, double t) {
    if (margin <= 0.0) return;
    const double m = masked_fraction(psi, edge);
    if (m > 1e-8) {
      std::ostringstream msg;
      msg << "packet mass fraction " << m << " within 5 sigma of the box boundary at t = " << t;
      throw Error(ErrorKind::Domain, msg.str());
    }
  };
  check_boundary(psi0, 0.0);

  const int steps = t_final == 0.0 ? 0 : static_cast<int>(std::ceil(std::abs(t_final) / spec.dt() - 1e-9));
  const double h = steps == 0 ? 0.0 : t_final / steps;
  WaveField psi = psi0;
  if (steps == 0) {
    if (checkpoint_every > 0 && checkpoint) checkpoint(0, 0.0, psi);
    return psi;
  }
  Stepper stepper(grid, spec, h);
  if (checkpoint_every > 0 && checkpoint) checkpoint(0, 0.0, psi);
  for (int s = 1; s <= steps; ++s) {
    stepper.step(psi.mutable_samples());
    const double t = s * h;
    check_boundary(psi, t);
    if (checkpoint_every > 0 && checkpoint && (s % checkpoint_every == 0 || s == steps)) {
      checkpoint(s, t, psi);
    }
  }
  const double drift = std::abs(psi.norm_squared() - norm0) / norm0;
  if (!(drift <= 1e-8)) {
    throw Error(ErrorKind::Instability, "norm drift " + std::to_string(drift) + " after " + std::to_string(steps) +
                                            " steps");
  }
  psi.refresh_norm();
  return psi;
}

double energy_expectation(const WaveField& psi, const OracleSpec& spec) {
  const BoxGrid& grid = psi.grid();
  spec.validate(grid);
  const double eps = spec.epsilon;
  const double dv = grid.cell_element();
  const auto& s = psi.samples();
  const std::vector<double> u = total_potential(grid, spec);
  double e = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) e += u[i] * std::norm(s[i]) * dv;

  const auto shape = grid.shape();
  if (spec.uniform_b == 0.0) {
    std::vector<cplx> buf = s;
    FftPlan(shape, FFTW_FORWARD).execute(buf);
    const double scale = dv / static_cast<double>(buf.size());
    for (std::size_t f = 0; f < buf.size(); ++f) {
      e += 0.5 * eps * eps * mode_wavevector(grid, f).squaredNorm() * std::norm(buf[f]) * scale;
    }
    return e;
  }
  const int n0 = shape[0], n1 = shape[1];
  std::vector<cplx> t(s.size());
  transpose(s, t, n0, n1);
  FftPlan({n0}, FFTW_FORWARD, n1).execute(t);
  std::vector<cplx> a = s;
  FftPlan({n1}, FFTW_FORWARD, n0).execute(a);
  for (int i = 0; i < n0; ++i) {
    const double x1 = grid.position(static_cast<std::size_t>(i * n1))[0];
    for (int j = 0; j < n1; ++j) {
      IVec m(2);
      m << fft_frequency(i, n0), fft_frequency(j, n1);
      const Vec xi = grid.wavevector(m);
      e += 0.5 * eps * eps * xi[0] * xi[0] * std::norm(t[static_cast<std::size_t>(j * n0 + i)]) * dv / n0;
      const double v = eps * xi[1] - spec.uniform_b * x1;
      e += 0.5 * v * v * std::norm(a[static_cast<std::size_t>(i * n1 + j)]) * dv / n1;
    }
  }
  return e;
}

}  // namespace semicl

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "semicl/fields.hpp"
#include "semicl/lattice.hpp"

namespace semicl {

/// Box of cells[j] lattice cells (each scaled by ε) sampled with
/// points_per_cell points per cell and axis. Node i sits at
/// x = ε Σ_j γ_j i_j / P, so the origin is a lattice point.
struct BoxGrid {
  Lattice lattice;
  double epsilon = 1.0;
  std::vector<int> cells;
  int points_per_cell = 16;

  BoxGrid() = default;
  /// Throws ErrorKind::Config for P < 16 (or below `min_points`), odd P, or
  /// non-positive cell counts.
  BoxGrid(Lattice lattice, double epsilon, std::vector<int> cells, int points_per_cell, int min_points = 16);

  int dim() const { return lattice.dim(); }
  std::vector<int> shape() const;
  std::size_t size() const;
  /// Quadrature weight of one node, ε^d |cell| / P^d.
  double cell_element() const;
  /// Macroscopic box edge vectors as columns, ε n_j γ_j.
  Mat box_edges() const;
  Vec position(std::size_t flat) const;
  /// Per-axis node index of a flat index (row-major, last axis fastest).
  IVec node(std::size_t flat) const;
  std::size_t flat(const IVec& node) const;
  /// Physical wavevector of FFT mode `mode` (signed integers per axis).
  Vec wavevector(const IVec& mode) const;
  /// Fractional position of x within the box, components in box units.
  Vec box_fraction(const Vec& x) const;
};

/// Samples of ψ^ε on a BoxGrid.
class WaveField {
 public:
  WaveField() = default;
  WaveField(BoxGrid grid, std::vector<cplx> samples);

  const BoxGrid& grid() const { return grid_; }
  double epsilon() const { return grid_.epsilon; }
  int dim() const { return grid_.dim(); }
  const std::vector<cplx>& samples() const { return samples_; }
  std::vector<cplx>& mutable_samples() { return samples_; }

  double norm_squared() const;
  /// Norm recorded at construction or at the last normalize().
  double stored_norm_squared() const { return stored_norm_; }
  void normalize();
  /// Records the current norm as the stored one.
  void refresh_norm() { stored_norm_ = norm_squared(); }

 private:
  BoxGrid grid_;
  std::vector<cplx> samples_;
  double stored_norm_ = 0.0;
};

/// ⟨a, b⟩ with the box quadrature.
cplx inner_product(const WaveField& a, const WaveField& b);
double l2_distance(const WaveField& a, const WaveField& b);

/// Fills a field from a function of the macroscopic position.
template <typename Fn>
WaveField sample_wavefield(const BoxGrid& grid, Fn&& fn) {
  std::vector<cplx> s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = fn(grid.position(i));
  return WaveField(grid, std::move(s));
}

// -- observables ----------------------------------------------------------------

/// f(q) e^{iγ·p}, f = re + i im.
struct ObservableTerm {
  IVec gamma;  ///< lattice index tuple
  ScalarField re;
  ScalarField im;

  cplx coefficient(const Vec& q) const;
};

/// a(q, p) = Σ_γ f_γ(q) e^{iγ·p}, Γ*-periodic in p.
class PeriodicObservable {
 public:
  PeriodicObservable() = default;
  /// Throws ErrorKind::Config unless every term has its (-γ, conj f) partner.
  PeriodicObservable(Lattice lattice, std::vector<ObservableTerm> terms, std::string name = {});

  /// f(q) cos(γ·p): the two conjugate terms.
  static PeriodicObservable cosine(const Lattice& lattice, const IVec& gamma, const ScalarField& f,
                                   std::string name = {});
  /// f(q) with γ = 0.
  static PeriodicObservable position(const Lattice& lattice, const ScalarField& f, std::string name = {});

  const Lattice& lattice() const { return lattice_; }
  const std::vector<ObservableTerm>& terms() const { return terms_; }
  const std::string& name() const { return name_; }
  double value(const Vec& q, const Vec& p) const;

 private:
  Lattice lattice_;
  std::vector<ObservableTerm> terms_;
  std::string name_;
};

// -- Bloch band content -----------------------------------------------------------

/// Bloch–Floquet grid of the box: k = Σ_j κ_j γ*_j / n_j with κ_j in
/// [-n_j/2, n_j/2).
std::vector<IVec> box_momentum_indices(const BoxGrid& grid);
Vec box_momentum(const BoxGrid& grid, const IVec& kappa);

/// Band wave packet ψ = N Σ_k g(k - k0) e^{-i(k-k0)·x0/ε} e^{ik·x/ε} u_n(k, x/ε)
/// with g(k) = exp(-|k|²/4σ²), k running over the box momenta of the zone
/// centred at k0. The periodic parts are put in a parallel-transport gauge
/// from the grid point nearest k0. Throws ErrorKind::PacketWidth when g at the
/// zone boundary exceeds 1e-8.
WaveField build_band_wavepacket(const BoxGrid& grid, const FourierPotential& potential, const PlaneWaveBasis& basis,
                                int band, const Vec& k0, const Vec& x0, double sigma);

/// Per box momentum: band coefficients ⟨u_m(k), ψ_k⟩ for every band of the
/// basis, plus the weight of ψ_k outside the basis.
struct BlochFloquetData {
  std::vector<IVec> kappa;
  std::vector<Eigen::VectorXcd> coefficients;  ///< scaled so Σ |c|² + outside = ‖ψ‖²
  double outside = 0.0;
  double total = 0.0;                          ///< ‖ψ‖²
};

/// Full transform; fibers are solved only where ψ_k carries weight above
/// `skip` × ‖ψ‖².
BlochFloquetData bloch_floquet(const WaveField& psi, const FourierPotential& potential, const PlaneWaveBasis& basis,
                               double skip = 1e-15);

/// 1 - ‖P_n ψ‖² / ‖ψ‖² with P_n the fiberwise projection on band n.
double band_leakage(const WaveField& psi, const FourierPotential& potential, const PlaneWaveBasis& basis, int band);

/// V_Γ(x/ε) at every node of the grid.
std::vector<double> lattice_potential_samples(const BoxGrid& grid, const FourierPotential& potential);

// -- snapshots ----------------------------------------------------------------------

void write_wavefield(std::ostream& out, const WaveField& psi);
WaveField read_wavefield(std::istream& in);

}  // namespace semicl

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "semicl/lattice.hpp"

namespace semicl {

/// Maps the eigenvector solved at k to the periodic part at k + Σ w_j γ*_j.
/// Needed on links that leave the grid through the zone boundary.
using ZoneWrap = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&, const IVec& wrap)>;

/// c_{k+w}(G) = c_k(G + w) for plane-wave coefficient vectors.
ZoneWrap plane_wave_wrap(const PlaneWaveBasis& basis);

/// Identity wrap for models whose fiber Hamiltonian is exactly Γ*-periodic.
ZoneWrap periodic_gauge_wrap();

/// Berry flux through each plaquette of a uniform grid over M*. Plaquette (i, j)
/// spans fractional corners i/N₁ .. (i+1)/N₁ and j/N₂ .. (j+1)/N₂.
struct PlaquetteField {
  Lattice lattice;
  int band = 1;
  std::vector<int> n;
  std::vector<double> flux;           ///< Ω₁₂ × plaquette area, in (-π, π]
  std::vector<double> link_phase_1;   ///< arg ⟨u(k)|u(k + δ₁)⟩ per grid point
  std::vector<double> link_phase_2;   ///< arg ⟨u(k)|u(k + δ₂)⟩ per grid point
  double plaquette_area = 0.0;

  bool empty() const { return flux.empty(); }
  /// Ω₁₂ averaged over plaquette (i, j).
  double curvature(int i, int j) const;
  /// Fractional coordinates of the plaquette centre.
  Vec centre(int i, int j) const;
  double total_flux() const;
};

/// Plaquette (link-variable) curvature of one band from fibers sampled on
/// brillouin_grid(lattice, n). Gauge invariant by construction; identically
/// empty in d = 1. Throws ErrorKind::GridTooCoarse when a link overlap has
/// modulus below 1e-10.
PlaquetteField berry_curvature_plaquette(const std::vector<BlochFiber>& fibers, const Lattice& lattice,
                                         const std::vector<int>& n, int band, const ZoneWrap& wrap);

struct ChernResult {
  int chern = 0;
  double raw = 0.0;       ///< Σ flux / 2π before rounding
  double residual = 0.0;  ///< |raw - chern|
};

/// Throws ErrorKind::NonQuantized when the raw sum is further than 1e-3 from
/// an integer.
ChernResult chern_number(const PlaquetteField& field);

/// j = -ℰ^⊥ · 2π C, ℰ^⊥ the counter-clockwise π/2 rotation of ℰ.
Vec hall_current(const PlaquetteField& field, const Vec& electric_field);

struct SumOverStatesOptions {
  int n_sum = 0;              ///< bands in the sum; 0 selects 4 × band
  bool converge = true;       ///< double n_sum until the change is below tolerance
  double tolerance = 1e-6;
  double degeneracy = 1e-8;   ///< minimal |E_m - E_n|
};

/// Ω_ij = -2 Im Σ_{m≠n} ⟨n|∂_iH|m⟩⟨m|∂_jH|n⟩ / (E_n - E_m)² using the first
/// n_sum bands of `fiber` (which must hold at least that many).
Mat berry_curvature_sos(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum,
                        double degeneracy = 1e-8);
/// M_ij = ½ Im Σ_{m≠n} ⟨n|∂_iH|m⟩⟨m|∂_jH|n⟩ / (E_n - E_m), the sum-over-states
/// form of Re (i/2)⟨∂_iψ, (H_per - E)∂_jψ⟩.
Mat magnetic_moment_sos(const BlochFiber& fiber, const PlaneWaveBasis& basis, int band, int n_sum,
                        double degeneracy = 1e-8);

Mat berry_curvature_sos(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                        int band, const SumOverStatesOptions& options = {});
Mat magnetic_moment_sos(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                        int band, const SumOverStatesOptions& options = {});

/// Band data sampled on a uniform grid over M* (brillouin_grid ordering).
struct GeometryGrid {
  Lattice lattice;
  int band = 1;
  std::vector<int> n;
  std::vector<Vec> k_points;
  std::vector<double> energy;
  std::vector<Vec> grad_energy;   ///< spectral derivative of the energy samples
  std::vector<Mat> curvature;     ///< sum-over-states Ω, antisymmetric
  std::vector<Mat> moment;        ///< sum-over-states M, antisymmetric
  PlaquetteField plaquettes;      ///< empty in d = 1
  double min_gap = 0.0;

  int dim() const { return lattice.dim(); }
  std::size_t size() const { return energy.size(); }
};

struct GeometryOptions {
  double gap_threshold = kDefaultGapThreshold;
  SumOverStatesOptions sos;
  int threads = 1;
};

/// Solves every fiber on the grid, checks band isolation (ErrorKind::GapClosure
/// otherwise) and fills all geometric fields.
GeometryGrid build_geometry_grid(const FourierPotential& potential, const PlaneWaveBasis& basis, int band,
                                 const std::vector<int>& n, const GeometryOptions& options = {});

/// Spectral gradient of periodic samples on brillouin_grid(lattice, n).
std::vector<Vec> spectral_gradient(const Lattice& lattice, const std::vector<int>& n,
                                   const std::vector<double>& samples);

// -- discrete Hofstadter model ------------------------------------------------

/// Magnetic unit cell of the Harper model at flux p/q: γ₁ = (q, 0), γ₂ = (0, 1).
Lattice hofstadter_lattice(int q);

/// Eigenpairs of the q×q Harper Bloch matrix at flux p/q, in a gauge where the
/// matrix is periodic over the magnetic zone. Throws ErrorKind::InvalidFlux
/// unless gcd(p, q) = 1 and 1 <= q <= 64.
BlochFiber hofstadter_fiber(int p, int q, const Vec& k);

struct HofstadterBand {
  int band = 0;
  ChernResult chern;
  double e_min = 0.0;
  double e_max = 0.0;
};

/// Plaquette Chern numbers of every Harper band on an n × n magnetic-zone grid.
std::vector<HofstadterBand> hofstadter_chern_table(int p, int q, int n);

// -- exports --------------------------------------------------------------------

/// Columns: k…, E, dE…, Ω_ij (i<j)…, M_ij (i<j)….
void write_geometry_csv(std::ostream& out, const GeometryGrid& grid);
/// {"flux": …, "band": …, "chern": …, "residual": …}
std::string chern_record_json(const std::string& flux_label, int band, const ChernResult& chern);

}  // namespace semicl

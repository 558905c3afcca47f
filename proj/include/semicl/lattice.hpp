#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semicl/types.hpp"

namespace semicl {

/// Dual basis γ*_j with γ_i · γ*_j = 2π δ_ij. Basis vectors are the columns of
/// `basis`. Throws ErrorKind::DegenerateLattice for a singular basis.
Mat dual_lattice(const Mat& basis);

/// Regular lattice Γ in d = 1 or 2 dimensions together with its dual Γ* and
/// the Brillouin-zone measure |M*|.
class Lattice {
 public:
  Lattice() = default;
  explicit Lattice(const Mat& basis);

  static Lattice cubic(int dim, double spacing);

  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }
  const Mat& dual_basis() const { return dual_; }
  double cell_volume() const { return cell_volume_; }
  double bz_volume() const { return bz_volume_; }

  /// Lattice vector Σ n_j γ_j.
  Vec lattice_vector(const IVec& n) const;
  /// Dual lattice vector Σ n_j γ*_j.
  Vec dual_vector(const IVec& n) const;
  /// Fractional dual coordinates f with k = Σ f_j γ*_j.
  Vec to_fractional_k(const Vec& k) const;
  /// Representative of k + Γ* whose fractional coordinates lie in [-1/2, 1/2).
  Vec fold_to_zone(const Vec& k) const;

 private:
  Mat basis_;
  Mat dual_;
  Mat dual_inverse_;
  double cell_volume_ = 0.0;
  double bz_volume_ = 0.0;
};

/// Periodic potential V_Γ(y) = Σ_G V̂_G e^{iG·y} with finitely many dual-lattice
/// coefficients, keyed by the integer index tuple of G.
class FourierPotential {
 public:
  using CoefficientMap = std::map<IndexKey, cplx>;

  FourierPotential() = default;
  /// Throws ErrorKind::Config when the reality condition V̂_{-G} = conj V̂_G fails.
  FourierPotential(Lattice lattice, CoefficientMap coefficients);

  static FourierPotential zero(const Lattice& lattice) { return FourierPotential(lattice, {}); }

  const Lattice& lattice() const { return lattice_; }
  int dim() const { return lattice_.dim(); }
  const CoefficientMap& coefficients() const { return coefficients_; }

  /// V̂_G for the index tuple, zero outside the stored support.
  cplx coefficient(const IVec& g_index) const;
  /// V_Γ at a microscopic position y.
  double value(const Vec& y) const;
  bool is_zero() const { return coefficients_.empty(); }
  /// Largest |index| component among nonzero coefficients.
  int max_index() const;

 private:
  Lattice lattice_;
  CoefficientMap coefficients_;
};

/// Plane waves e^{i(k+G)·y} with |G| ≤ cutoff, ordered by |G| and then by index
/// tuple. Closed under G -> -G and always containing G = 0.
class PlaneWaveBasis {
 public:
  PlaneWaveBasis() = default;
  PlaneWaveBasis(const Lattice& lattice, double cutoff);
  /// Explicit index set; must be closed under negation and contain zero.
  PlaneWaveBasis(const Lattice& lattice, std::vector<IVec> indices);

  /// Cutoff leaving at least `extra_shells` shells of |G| above the shell that
  /// holds the n-th plane wave.
  static PlaneWaveBasis for_bands(const Lattice& lattice, int n_bands, int extra_shells = 5);

  const Lattice& lattice() const { return lattice_; }
  int size() const { return static_cast<int>(indices_.size()); }
  double cutoff() const { return cutoff_; }
  const std::vector<IVec>& indices() const { return indices_; }
  const std::vector<Vec>& g_vectors() const { return g_vectors_; }
  /// Position of an index tuple in the basis, or -1.
  int find(const IVec& index) const;

 private:
  void finalize();

  Lattice lattice_;
  std::vector<IVec> indices_;
  std::vector<Vec> g_vectors_;
  std::map<IndexKey, int> lookup_;
  double cutoff_ = 0.0;
};

/// Eigenpairs of H_per(k) for the lowest bands, energies ascending and
/// eigenvectors stored column-wise over the plane-wave basis.
struct BlochFiber {
  Vec k;
  Eigen::VectorXd energies;
  Eigen::MatrixXcd vectors;

  int bands() const { return static_cast<int>(energies.size()); }
  /// Band numbers are 1-based throughout the library.
  double energy(int band) const { return energies[band - 1]; }
  Eigen::VectorXcd vector(int band) const { return vectors.col(band - 1); }
};

/// H_per(k)_{GG'} = ½|k+G|² δ_{GG'} + V̂_{G-G'}.
Eigen::MatrixXcd bloch_hamiltonian(const Vec& k, const FourierPotential& potential,
                                   const PlaneWaveBasis& basis);

/// Lowest n_bands eigenpairs (all when n_bands <= 0). Each eigenvector is
/// rotated so that its largest-magnitude component is real and positive.
BlochFiber solve_fiber(const Vec& k, const FourierPotential& potential, const PlaneWaveBasis& basis,
                       int n_bands = 0);

/// Default refusal threshold for isolated-band computations.
inline constexpr double kDefaultGapThreshold = 1e-6;

/// min over the k points of the distance from E_band to its neighbours (the
/// lower neighbour is skipped for band 1). Throws ErrorKind::GapClosure below
/// the threshold.
double min_gap(int band, const FourierPotential& potential, const PlaneWaveBasis& basis,
               const std::vector<Vec>& k_points, double threshold = kDefaultGapThreshold);

/// Uniform N_1 × … × N_d grid over M* in fractional coordinates i_j / N_j
/// (not centred), row-major with the last axis fastest.
std::vector<Vec> brillouin_grid(const Lattice& lattice, const std::vector<int>& n);

/// Plain-text potential file: `dim`, `basis` and `coeff` lines (see README).
FourierPotential load_potential(const std::string& path);

}  // namespace semicl

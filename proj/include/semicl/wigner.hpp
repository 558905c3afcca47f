#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "semicl/wavefield.hpp"

namespace semicl {

// ψ is treated as a function on ℝ^d that vanishes outside the box: the
// half-shifts q ± εξ/2 never wrap around. On a periodic box the wrapped
// products would add ghost terms halfway around the box.

/// w(q, p) on box nodes × a momentum grid p = Σ_j m_j γ*_j / (2 n_j) with
/// m_j in [-N_j/2, N_j/2), N_j = P n_j nodes per axis. That range covers P/2
/// Brillouin zones per axis.
struct WignerGrid {
  BoxGrid box;
  std::vector<int> p_shape;      ///< N_j
  std::vector<double> values;    ///< [q][p], p in centred order

  double epsilon() const { return box.epsilon; }
  std::size_t p_size() const;
  Vec momentum(std::size_t p_flat) const;
  /// Signed mode m of a flat p index.
  IVec p_mode(std::size_t p_flat) const;
  double p_element() const;
  double at(std::size_t q, std::size_t p) const { return values[q * p_size() + p]; }
  /// Cubic interpolation; zero outside the box and the momentum window.
  double interpolate(const Vec& q, const Vec& p) const;
};

/// w_red(r, k) on box nodes × the torus grid k = Σ_j κ_j γ*_j / (2 n_j),
/// κ_j in [0, 2 n_j).
struct ReducedWigner {
  BoxGrid box;
  std::vector<int> k_shape;      ///< 2 n_j
  std::vector<double> values;    ///< [r][k]

  std::size_t k_size() const;
  Vec momentum(std::size_t k_flat) const;
  IVec k_index(std::size_t k_flat) const;
  double k_element() const;
  double at(std::size_t r, std::size_t k) const { return values[r * k_size() + k]; }
  /// Cubic interpolation, periodic in k, zero outside the box in r.
  double interpolate(const Vec& r, const Vec& k) const;
};

/// Discrete w(q, p) = (2π)^{-d} ∫ dξ e^{iξ·p} ψ*(q + εξ/2) ψ(q - εξ/2), with the
/// ξ integral sampled where εξ/2 lands on grid nodes. Throws ErrorKind::Aliasing
/// if the imaginary residue exceeds 1e-10 max|w|.
WignerGrid wigner_transform(const WaveField& psi, int threads = 1);

/// One q row of the transform (centred p order).
std::vector<double> wigner_row(const WaveField& psi, std::size_t q_flat);

/// w_s(r, k) = |M*|^{-1} Σ_γ e^{iγ·k} ψ*(r + εγ/2) ψ(r - εγ/2) over the γ with
/// both points inside the box. Throws ErrorKind::GridAlignment for an odd
/// number of cells along any axis.
ReducedWigner wigner_series(const WaveField& psi, int threads = 1);

/// Σ_{γ*} w(r, k + γ*) over the copies held by the momentum grid. Throws
/// ErrorKind::Folding if the grid does not hold a whole number of zones.
ReducedWigner fold_wigner(const WignerGrid& w);

struct Marginals {
  std::vector<double> position;   ///< ∫ w dp per q node
  std::vector<double> momentum;   ///< ∫ w dq per p node
  double total = 0.0;
};
Marginals marginals(const WignerGrid& w);

double l2_norm(const WignerGrid& w);

/// ⟨ψ, â ψ⟩ through the shift form (â ψ)(x) = Σ_γ f_γ(x + εγ/2) ψ(x + εγ).
double weyl_expectation(const WaveField& psi, const PeriodicObservable& a);

/// ∫ a(r, k) w_red(r, k) dr dk on the grid.
double pair_reduced(const ReducedWigner& w, const PeriodicObservable& a);
/// Same with an arbitrary symbol; skips nodes with |w| dr dk below `skip`.
double pair_reduced(const ReducedWigner& w, const std::function<double(const Vec&, const Vec&)>& symbol,
                    int threads = 1, double skip = 0.0);
/// ∫ a w dq dp on the full grid.
double pair_wigner(const WignerGrid& w, const std::function<double(const Vec&, const Vec&)>& symbol, int threads = 1,
                   double skip = 0.0);

struct PairingResult {
  double shift = 0.0;   ///< Weyl shift form, the returned value
  double grid = 0.0;    ///< ∫ a w_red
};

/// Computes both forms; throws ErrorKind::Inconsistency when they differ by
/// more than 1e-4 × max(1, |shift|).
PairingResult pair_observable(const WaveField& psi, const PeriodicObservable& a, int threads = 1);

/// L¹ grid distance Σ |a - b| dr dk.
double l1_distance(const ReducedWigner& a, const ReducedWigner& b);
double l1_distance(const WignerGrid& a, const WignerGrid& b);

void write_wigner_csv(std::ostream& out, const WignerGrid& w);
void write_reduced_csv(std::ostream& out, const ReducedWigner& w);

}  // namespace semicl

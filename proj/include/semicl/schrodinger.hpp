#pragma once

#include <functional>

#include "semicl/fields.hpp"
#include "semicl/lattice.hpp"
#include "semicl/wavefield.hpp"

namespace semicl {

/// iε ∂_t ψ = (½(-iε∇ - A)² + V_Γ(x/ε) + φ(x)) ψ on a BoxGrid.
struct OracleSpec {
  FourierPotential potential;
  /// φ only; a vector potential here is rejected.
  ExternalFields fields;
  double epsilon = 1.0;
  /// 0 selects c_stab · ε.
  double dt_micro = 0.0;
  double c_stab = 0.1;
  /// Uniform B in the Landau gauge A = (0, B x_1); 2D rectangular lattices only.
  double uniform_b = 0.0;
  /// Packet width for the boundary monitor; the margin is 5 σ. 0 disables it.
  double sigma = 0.0;

  double dt() const { return dt_micro > 0.0 ? dt_micro : c_stab * epsilon; }
  /// Throws ErrorKind::Config for a step above c_stab ε, a vector potential,
  /// an ε mismatch with the grid, or a Landau mode outside 2D rectangular.
  void validate(const BoxGrid& grid) const;
};

using Checkpoint = std::function<void(int step, double t, const WaveField& psi)>;

/// Strang split-step: half potential step, kinetic step in Fourier space
/// (axiswise in the Landau mode), half potential step. Throws
/// ErrorKind::Instability when the norm drifts by more than 1e-8 and
/// ErrorKind::Domain when the mass within 5σ of the box boundary exceeds 1e-8.
/// `checkpoint_every` > 0 calls `checkpoint` every that many steps and at the end.
WaveField evolve(const WaveField& psi0, double t_final, const OracleSpec& spec, int checkpoint_every = 0,
                 const Checkpoint& checkpoint = {});

/// ⟨ψ, H^ε ψ⟩ with spectral kinetic energy.
double energy_expectation(const WaveField& psi, const OracleSpec& spec);

/// Fraction of ‖ψ‖² at nodes within `margin` of the box boundary.
double boundary_mass(const WaveField& psi, double margin);

}  // namespace semicl

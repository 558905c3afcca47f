#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "semicl/errors.hpp"
#include "semicl/fields.hpp"
#include "semicl/geometry.hpp"
#include "semicl/spline.hpp"

namespace semicl {

/// Band data at one kinetic momentum.
struct BandPoint {
  double energy = 0.0;
  Vec gradient;                     ///< ∇E
  Mat curvature;                    ///< Ω, antisymmetric
  Mat moment;                       ///< M, antisymmetric
  std::array<Mat, kMaxDim> moment_gradient; ///< ∂_m M for m < dim

  explicit BandPoint(int dim = 1);
};

/// A single isolated band as seen by the flow.
class BandModel {
 public:
  virtual ~BandModel() = default;
  virtual int dim() const = 0;
  virtual BandPoint evaluate(const Vec& kappa) const = 0;
};

/// E = ½|κ|², no geometry. Not Γ*-periodic; used for the V = 0 scenarios.
class FreeBand : public BandModel {
 public:
  explicit FreeBand(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  BandPoint evaluate(const Vec& kappa) const override;

 private:
  int dim_;
};

/// Any band given by a callable, for closed-form test models.
class FunctionBand : public BandModel {
 public:
  using Fn = std::function<BandPoint(const Vec&)>;
  FunctionBand(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  BandPoint evaluate(const Vec& kappa) const override { return fn_(kappa); }

 private:
  int dim_;
  Fn fn_;
};

/// E(κ) = e0 - Σ_j 2 t_j cos(κ·γ_j) on the given lattice, Ω = M = 0.
class CosineBand : public BandModel {
 public:
  CosineBand(Lattice lattice, double e0, std::vector<double> hopping);
  int dim() const override { return lattice_.dim(); }
  BandPoint evaluate(const Vec& kappa) const override;

 private:
  Lattice lattice_;
  double e0_;
  std::vector<double> hopping_;
};

/// Periodic cubic interpolation of a GeometryGrid in fractional coordinates.
/// The velocity is the derivative of the energy interpolant, so the flow of
/// the interpolated H_sc is exactly Hamiltonian; the spectral gradient samples
/// are interpolated separately and only used for gradient_consistency().
class InterpolatedBand : public BandModel {
 public:
  explicit InterpolatedBand(const GeometryGrid& grid);
  int dim() const override { return lattice_.dim(); }
  BandPoint evaluate(const Vec& kappa) const override;
  const Lattice& lattice() const { return lattice_; }

  /// ∇E from the interpolated spectral-gradient samples.
  Vec interpolated_gradient(const Vec& kappa) const;
  /// max |∂E_spline - interpolated ∇E| over a probe grid `oversample` times
  /// finer than the geometry grid.
  double gradient_consistency(int oversample = 3) const;

 private:
  Lattice lattice_;
  Mat to_frac_;   // f = to_frac_ κ
  PeriodicSpline energy_;
  std::vector<PeriodicSpline> grad_;
  PeriodicSpline curvature_;
  PeriodicSpline moment_;
};

/// Kinetic phase point (r, κ).
struct PhasePoint {
  Vec r;
  Vec kappa;
};

/// Canonical point (r, k) with k = κ + A(r).
struct CanonicalPoint {
  Vec r;
  Vec k;
};

PhasePoint to_kinetic(const CanonicalPoint& p, const ExternalFields& fields);
CanonicalPoint to_canonical(const PhasePoint& z, const ExternalFields& fields);

enum class Integrator { RK4, ImplicitMidpoint };

struct FlowSpec {
  double epsilon = 0.0;
  int order = 0;  ///< 0: leading-order flow, 1: ε-corrected flow
  double dt = 1e-3;
  Integrator integrator = Integrator::RK4;
  std::shared_ptr<const BandModel> band;
  ExternalFields fields;

  /// ε as it enters H_sc and Θ: zero for the leading-order flow.
  double active_epsilon() const { return order == 0 ? 0.0 : epsilon; }
};

inline constexpr double kSymplecticDetThreshold = 1e-10;

/// H_sc = E(κ) + φ(r) - ε Σ_ij M_ij(κ) B_ij(r).
double hsc_energy(const PhasePoint& z, const FlowSpec& spec);

/// dH_sc = (∇_r H_sc, ∇_κ H_sc).
PhaseVec hsc_differential(const PhasePoint& z, const FlowSpec& spec);

/// Θ = (B(r), -I; I, εΩ(κ)).
PhaseMat symplectic_matrix(const PhasePoint& z, const FlowSpec& spec);

/// Solves Θ ż = dH_sc by elimination: (I + εΩB) ṙ = ∇_κH + εΩ ∇_rH and
/// κ̇ = B ṙ - ∇_rH, with det Θ = det(I + εΩB). Throws
/// ErrorKind::SymplecticDegeneracy when |det Θ| < 1e-10.
PhaseVec flow_vector_field(const PhasePoint& z, const FlowSpec& spec);

PhaseVec pack(const PhasePoint& z);
PhasePoint unpack(const PhaseVec& v, int dim);

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> points;
  std::vector<double> energy;

  std::size_t size() const { return t.size(); }
  const PhasePoint& back() const { return points.back(); }
};

/// Error carrying the part of the trajectory computed before a failure.
class TruncatedTrajectory : public Error {
 public:
  TruncatedTrajectory(const std::string& what, Trajectory partial)
      : Error(ErrorKind::TruncatedTrajectory, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Fixed-step integration from t = 0 to t_final (negative allowed). The step
/// is |t_final| / ceil(|t_final| / dt). Every `record_every`-th step and the
/// final point are stored.
Trajectory integrate_flow(const PhasePoint& z0, double t_final, const FlowSpec& spec, int record_every = 1);

/// Final point only.
PhasePoint flow_map(const PhasePoint& z0, double t, const FlowSpec& spec);

/// (r, k) -> (r(t), κ(t) + A(r(t))).
CanonicalPoint canonical_flow(const CanonicalPoint& p, double t, const FlowSpec& spec);

/// Columns t, r…, kappa…, k…, H_sc.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const FlowSpec& spec);

}  // namespace semicl

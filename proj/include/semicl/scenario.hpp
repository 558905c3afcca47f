#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "semicl/fields.hpp"
#include "semicl/flow.hpp"
#include "semicl/lattice.hpp"
#include "semicl/wavefield.hpp"

namespace semicl {

/// Everything a run needs, read from one plain-text scenario file. The format
/// is described in the README; unknown keywords are configuration errors.
struct Scenario {
  std::string name;
  std::string source;   ///< file path or "<string>"

  int dim = 1;
  Lattice lattice;
  FourierPotential potential;
  double cutoff = 0.0;            ///< plane-wave |G| cutoff; 0 picks one from the band count
  int band = 1;
  int bands_out = 4;              ///< bands written by `bands`
  int path_points = 101;          ///< k points along each `bands` path axis
  std::vector<int> geometry_grid; ///< band interpolation / geometry grid per axis
  ExternalFields fields;
  double uniform_b = 0.0;
  bool free = false;              ///< V = 0 with E = ½|k|², full Wigner transform

  // packet
  Vec k0;
  Vec x0;
  double width = 0.25;            ///< position width s; σ = ε / (2 s)

  // experiment
  std::vector<double> epsilons;
  double t_final = 1.0;
  int order = 0;
  std::vector<double> box;        ///< macroscopic box extent along each lattice direction, in lattice units
  int points_per_cell = 16;
  double c_stab = 0.1;
  double dt_micro = 0.0;
  double flow_dt = 0.01;          ///< flow step used when transporting observables
  double wigner_skip = 1e-15;
  std::vector<double> snapshot_times;
  std::vector<PeriodicObservable> observables;

  // flow subcommand
  std::vector<PhasePoint> points;
  double flow_t = 10.0;
  double flow_epsilon = 0.0;
  double trajectory_dt = 1e-3;
  Integrator integrator = Integrator::RK4;

  // Hofstadter subcommand
  int hof_p = 1;
  int hof_q = 3;
  int hof_grid = 24;

  PlaneWaveBasis plane_wave_basis() const;
  /// Box of the experiment at ε; throws ErrorKind::Config unless box / ε is an
  /// even integer number of cells along each axis.
  BoxGrid box_grid(double epsilon) const;
};

Scenario parse_scenario(std::istream& in, const std::string& source = "<string>");
/// Throws ErrorKind::Config naming the path when the file cannot be read.
Scenario load_scenario(const std::string& path);

/// Parses one primitive, e.g. `plateau center=4 halfwidth=3 ramp=1 linear=0.5`.
FieldTerm parse_field_term(const std::vector<std::string>& tokens, int dim);
/// Multiplies a primitive by a constant.
FieldTerm scale_term(const FieldTerm& term, double factor);

}  // namespace semicl

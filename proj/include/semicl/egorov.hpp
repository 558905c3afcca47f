#pragma once

#include <memory>
#include <string>
#include <vector>

#include "semicl/flow.hpp"
#include "semicl/scenario.hpp"
#include "semicl/schrodinger.hpp"
#include "semicl/wigner.hpp"

namespace semicl {

/// Normalized initial packet of a scenario at ε: a band wave packet, or a
/// Gaussian in free mode. With a uniform B the free Gaussian gets the gauge
/// factor e^{iB u₁u₂/2ε}, u = x - x0; for width √(ε/B) it is then a coherent
/// cyclotron state.
WaveField initial_state(const Scenario& scenario, double epsilon);

/// Oracle settings of a scenario at ε; the boundary monitor uses the packet width.
OracleSpec oracle_spec(const Scenario& scenario, double epsilon);

/// A scenario with its band model built once and shared by every ε.
class EgorovExperiment {
 public:
  /// Periodic scenarios interpolate the band from a geometry grid (which
  /// refuses closed gaps); free scenarios use E = ½|k|².
  explicit EgorovExperiment(Scenario scenario, int threads = 1);

  const Scenario& scenario() const { return scenario_; }
  int threads() const { return threads_; }
  std::shared_ptr<const BandModel> band() const { return band_; }

  OracleSpec oracle_spec(double epsilon) const { return semicl::oracle_spec(scenario_, epsilon); }
  FlowSpec flow_spec(double epsilon, int order) const;
  WaveField initial_state(double epsilon) const { return semicl::initial_state(scenario_, epsilon); }

 private:
  Scenario scenario_;
  int threads_ = 1;
  std::shared_ptr<const BandModel> band_;
};

struct EgorovResult {
  double epsilon = 0.0;
  double t = 0.0;
  int order = 0;
  std::vector<std::string> names;
  std::vector<double> quantum;    ///< ⟨ψ_t, â ψ_t⟩
  std::vector<double> classical;  ///< ∫ w^{ψ₀} (a ∘ Φ^t)
  std::vector<double> error;      ///< |quantum - classical|
  double leakage = 0.0;           ///< band leakage of ψ₀ (periodic mode)
  std::vector<int> cells;
  int points_per_cell = 0;
  double dt_micro = 0.0;
  double flow_dt = 0.0;
  std::size_t trajectories = 0;
};

/// Quantum expectation at t against the observable transported forward along
/// the flow and paired with the initial Wigner function (reduced in periodic
/// mode, full in free mode). Errors from the stages are rethrown with ε and
/// the stage name prepended.
EgorovResult egorov_error(const EgorovExperiment& experiment, double epsilon, int order, double t);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

/// Least squares of log e against log ε. Needs at least two positive points.
LogLogFit fit_loglog(const std::vector<double>& epsilon, const std::vector<double>& error);

struct ObservableConvergence {
  std::string name;
  std::vector<double> errors;
  std::vector<double> floors;
  LogLogFit fit;
  bool monotone = false;     ///< strictly decreasing as ε decreases
  bool above_floor = false;  ///< every error exceeds 3× its t = 0 floor
};

struct ConvergenceReport {
  int order = 0;
  double t_final = 0.0;
  std::vector<double> epsilons;   ///< descending
  std::vector<EgorovResult> runs;
  std::vector<EgorovResult> floor_runs;
  std::vector<ObservableConvergence> observables;
  bool inconclusive = false;      ///< the first observable is non-monotone or under the floor
  std::vector<std::string> flags;
  double seconds = 0.0;           ///< wall time, kept out of the JSON report
};

/// Runs egorov_error at t = 0 and t_final for each ε (sorted descending). Needs
/// at least three ε values.
ConvergenceReport convergence_study(const EgorovExperiment& experiment, int order);

struct TransportSnapshot {
  double t = 0.0;
  // Periodic mode.
  ReducedWigner quantum;
  ReducedWigner transported;
  // Free mode.
  WignerGrid quantum_full;
  WignerGrid transported_full;
  double l1 = 0.0;
  std::vector<double> quantum_pairing;      ///< ⟨ψ_t, â ψ_t⟩
  std::vector<double> transported_pairing;  ///< ∫ a (w₀ ∘ Φ^{-t})
  std::size_t evaluated = 0;                ///< grid nodes pulled back
};

struct TransportDemo {
  double epsilon = 0.0;
  std::vector<std::string> names;
  std::vector<TransportSnapshot> snapshots;
};

/// Pulls the initial Wigner function back along the order-0 flow at the given
/// times (cubic interpolation of w₀ at Φ^{-t} of the grid nodes) and sets it
/// beside the Wigner function of the evolved state. Nodes are pulled back
/// only near the forward image of the initial support.
TransportDemo transport_wigner_demo(const EgorovExperiment& experiment, double epsilon,
                                    const std::vector<double>& times);

struct TransportFit {
  std::vector<std::string> names;
  std::vector<double> epsilons;
  std::vector<std::vector<double>> errors;  ///< [observable][ε] at the last snapshot
  std::vector<double> constant;             ///< C = max e / ε
  std::vector<LogLogFit> fits;
  std::vector<bool> decreasing;
};
TransportFit fit_transport(const std::vector<TransportDemo>& demos);

std::string report_json(const ConvergenceReport& report, const Scenario& scenario);
std::string result_json(const EgorovResult& result, const Scenario& scenario);
std::string transport_json(const TransportFit& fit, const std::vector<TransportDemo>& demos, const Scenario& scenario);

}  // namespace semicl

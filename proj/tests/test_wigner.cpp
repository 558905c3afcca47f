#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semicl/egorov.hpp"
#include "semicl/errors.hpp"
#include "semicl/scenario.hpp"
#include "semicl/wigner.hpp"
#include "support.hpp"

using namespace semicl;

namespace {

constexpr double kEps = 0.125;
constexpr double kS = 0.3;   // position std of |ψ|²
constexpr double kQ0 = 4.0;
constexpr double kP0 = 1.0;

// (2π s²)^{-1/4} exp(-(x - q0)²/4s² + i p0 x / ε)
WaveField gaussian() {
  const BoxGrid g(Lattice::cubic(1, 1.0), kEps, {64}, 16);
  const double n = std::pow(kTwoPi * kS * kS, -0.25);
  return sample_wavefield(g, [&](const Vec& x) {
    return n * std::exp(cplx(-std::pow(x[0] - kQ0, 2) / (4 * kS * kS), kP0 * x[0] / kEps));
  });
}

double gaussian_wigner(double q, double p) {
  return std::exp(-std::pow(q - kQ0, 2) / (2 * kS * kS) - 2 * kS * kS * std::pow(p - kP0, 2) / (kEps * kEps)) /
         (kPi * kEps);
}

WaveField scenario_packet(double eps) {
  const Scenario sc = load_scenario(support::scenario("cosine_1d.scn"));
  return initial_state(sc, eps);
}

}  // namespace

TEST_CASE("Wigner transform of a Gaussian matches the closed form") {
  const WaveField psi = gaussian();
  const WignerGrid w = wigner_transform(psi);
  const double peak = 1.0 / (kPi * kEps);
  double worst = 0.0;
  for (std::size_t q = 0; q < w.box.size(); ++q) {
    const double x = w.box.position(q)[0];
    for (std::size_t p = 0; p < w.p_size(); ++p) worst = std::max(worst, std::abs(w.at(q, p) - gaussian_wigner(x, w.momentum(p)[0])));
  }
  CHECK(worst <= 1e-6 * peak);
}

TEST_CASE("Wigner marginals and total mass") {
  const WaveField psi = gaussian();
  const WignerGrid w = wigner_transform(psi);
  const Marginals m = marginals(w);
  CHECK(std::abs(m.total - 1.0) <= 1e-6);
  double pos = 0.0, mom = 0.0;
  for (std::size_t q = 0; q < w.box.size(); ++q) pos = std::max(pos, std::abs(m.position[q] - std::norm(psi.samples()[q])));
  // Momentum density of the packet: normal with mean p0 and std ε / (2s).
  const double sp = kEps / (2 * kS);
  for (std::size_t p = 0; p < w.p_size(); ++p) {
    const double pv = w.momentum(p)[0];
    const double rho = std::exp(-std::pow(pv - kP0, 2) / (2 * sp * sp)) / (sp * std::sqrt(kTwoPi));
    mom = std::max(mom, std::abs(m.momentum[p] - rho));
  }
  CHECK(pos <= 1e-6);
  CHECK(mom <= 1e-6);
}

TEST_CASE("L2 identity of the Wigner function") {
  for (const WaveField& psi : {gaussian(), scenario_packet(kEps)}) {
    const WignerGrid w = wigner_transform(psi);
    const double lhs = std::pow(l2_norm(w), 2);
    const double rhs = std::pow(psi.norm_squared(), 2) / (kTwoPi * kEps);
    CHECK(std::abs(lhs - rhs) <= 1e-4 * rhs);
  }
}

TEST_CASE("folded Wigner function equals the Wigner series pointwise") {
  const WaveField psi = scenario_packet(kEps);
  const ReducedWigner folded = fold_wigner(wigner_transform(psi));
  const ReducedWigner series = wigner_series(psi);
  REQUIRE(folded.values.size() == series.values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < series.values.size(); ++i) worst = std::max(worst, std::abs(folded.values[i] - series.values[i]));
  CHECK(worst <= 1e-10);
  CHECK(l1_distance(folded, series) <= 1e-10);
}

TEST_CASE("pairing by shift operators agrees with the reduced Wigner integral") {
  const Scenario sc = load_scenario(support::scenario("cosine_1d.scn"));
  for (double eps : {0.125, 0.0625}) {
    const WaveField psi = initial_state(sc, eps);
    const ReducedWigner w = wigner_series(psi);
    for (const PeriodicObservable& a : sc.observables) {
      const double shift = weyl_expectation(psi, a);
      const double grid = pair_reduced(w, a);
      CHECK(std::abs(shift - grid) <= 1e-6);
      const PairingResult r = pair_observable(psi, a);
      CHECK(r.shift == doctest::Approx(shift));
    }
  }
}

TEST_CASE("property: pairing with a position observable integrates |psi|^2") {
  const WaveField psi = gaussian();
  ScalarField f(1);
  f.add(TrigTerm{1.0, Vec::Constant(1, 1.3), 0.2});
  const PeriodicObservable a = PeriodicObservable::position(Lattice::cubic(1, 1.0), f);
  double direct = 0.0;
  for (std::size_t i = 0; i < psi.grid().size(); ++i)
    direct += f.value(psi.grid().position(i)) * std::norm(psi.samples()[i]) * psi.grid().cell_element();
  CHECK(weyl_expectation(psi, a) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(pair_reduced(wigner_series(psi), a) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("odd cell counts are refused by the series") {
  const BoxGrid g(Lattice::cubic(1, 1.0), 0.25, {7}, 16);
  const WaveField psi = sample_wavefield(g, [](const Vec& x) { return cplx(std::exp(-std::pow(x[0] - 0.9, 2)), 0.0); });
  try {
    wigner_series(psi);
    FAIL("odd box accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridAlignment);
  }
}

TEST_CASE("interpolation reproduces nodes and csv export has a header") {
  const WaveField psi = gaussian();
  const WignerGrid w = wigner_transform(psi);
  const std::size_t q = 512, p = w.p_size() / 2 + 8;
  CHECK(w.interpolate(w.box.position(q), w.momentum(p)) == doctest::Approx(w.at(q, p)).epsilon(1e-12));
  const ReducedWigner r = wigner_series(psi);
  CHECK(r.interpolate(r.box.position(q), r.momentum(3)) == doctest::Approx(r.at(q, 3)).epsilon(1e-12));
  std::ostringstream a;
  write_reduced_csv(a, r);
  CHECK(a.str().size() > 100);
}

#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "semicl/egorov.hpp"
#include "semicl/errors.hpp"
#include "semicl/flow.hpp"
#include "semicl/scenario.hpp"
#include "support.hpp"

using namespace semicl;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// E = 2 - cos κ₁ - cos κ₂ + 0.3 cos(κ₁ + κ₂), Ω₁₂ = 0.5 cos κ₁ cos κ₂,
// M₁₂ = 0.3 sin κ₁ + 0.2 cos κ₂.
std::shared_ptr<const BandModel> geometric_band() {
  return std::make_shared<FunctionBand>(2, [](const Vec& k) {
    BandPoint p(2);
    p.energy = 2.0 - std::cos(k[0]) - std::cos(k[1]) + 0.3 * std::cos(k[0] + k[1]);
    p.gradient = v2(std::sin(k[0]) - 0.3 * std::sin(k[0] + k[1]), std::sin(k[1]) - 0.3 * std::sin(k[0] + k[1]));
    const double om = 0.5 * std::cos(k[0]) * std::cos(k[1]);
    p.curvature(0, 1) = om;
    p.curvature(1, 0) = -om;
    const double m = 0.3 * std::sin(k[0]) + 0.2 * std::cos(k[1]);
    p.moment(0, 1) = m;
    p.moment(1, 0) = -m;
    p.moment_gradient[0](0, 1) = 0.3 * std::cos(k[0]);
    p.moment_gradient[0](1, 0) = -0.3 * std::cos(k[0]);
    p.moment_gradient[1](0, 1) = -0.2 * std::sin(k[1]);
    p.moment_gradient[1](1, 0) = 0.2 * std::sin(k[1]);
    return p;
  });
}

// φ = 0.2 cos(0.5 x₁ + 0.3 x₂), A = (0.1 sin x₂, 0.3 sin x₁).
ExternalFields trig_fields() {
  ScalarField phi(2), a1(2), a2(2);
  phi.add(TrigTerm{0.2, v2(0.5, 0.3), 0.0});
  a1.add(TrigTerm{0.1, v2(0.0, 1.0), -kPi / 2});
  a2.add(TrigTerm{0.3, v2(1.0, 0.0), -kPi / 2});
  return ExternalFields(phi, {a1, a2});
}

// A₂ = b x₁ on a wide plateau, so B₁₂ = b near the origin.
ScalarField uniform_a2(double b) {
  ScalarField a2(2);
  PlateauPolyTerm p;
  p.center = v2(0.0, 0.0);
  p.halfwidth = v2(50.0, 50.0);
  p.ramp = v2(5.0, 5.0);
  p.poly.linear = v2(b, 0.0);
  p.poly.quadratic = Mat::Zero(2, 2);
  a2.add(p);
  return a2;
}

FlowSpec geometric_spec(double eps, int order) {
  FlowSpec s;
  s.epsilon = eps;
  s.order = order;
  s.band = geometric_band();
  s.fields = trig_fields();
  return s;
}

PhasePoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  return {v2(u(rng), u(rng)), v2(u(rng), u(rng))};
}

// ṙ = ∇E(κ), κ̇ = -∇φ(r) + B(r) ṙ, coded without the library's elimination.
PhaseVec leading_order_field(const PhasePoint& z, const BandModel& band, const ExternalFields& f) {
  const Vec rdot = band.evaluate(z.kappa).gradient;
  const Mat b = f.magnetic_field(z.r);
  const Vec kdot = -f.grad_scalar_potential(z.r) + b * rdot;
  PhaseVec out(4);
  out << rdot, kdot;
  return out;
}

}  // namespace

TEST_CASE("leading-order flow equals the directly coded field") {
  const FlowSpec spec = geometric_spec(0.1, 0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const PhasePoint z = random_point(rng);
    const PhaseVec a = flow_vector_field(z, spec);
    const PhaseVec b = leading_order_field(z, *spec.band, spec.fields);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Same for whole trajectories, integrated here with a hand-written RK4.
  const PhasePoint z0{v2(0.3, -0.2), v2(0.7, 0.4)};
  const double t = 2.0;
  const int steps = 2000;
  const double h = t / steps;
  auto f = [&](const PhaseVec& y) {
    return leading_order_field(unpack(y, 2), *spec.band, spec.fields);
  };
  PhaseVec y = pack(z0);
  for (int s = 0; s < steps; ++s) {
    const PhaseVec k1 = f(y);
    const PhaseVec k2 = f(y + 0.5 * h * k1);
    const PhaseVec k3 = f(y + 0.5 * h * k2);
    const PhaseVec k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  FlowSpec s2 = spec;
  s2.dt = h;
  CHECK((pack(flow_map(z0, t, s2)) - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("corrected flow solves Theta zdot = dH") {
  const FlowSpec spec = geometric_spec(0.2, 1);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const PhasePoint z = random_point(rng);
    const PhaseVec zdot = flow_vector_field(z, spec);
    const PhaseVec res = symplectic_matrix(z, spec) * zdot - hsc_differential(z, spec);
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("H_sc differential matches finite differences") {
  const FlowSpec spec = geometric_spec(0.2, 1);
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    const PhasePoint z = random_point(rng);
    const PhaseVec d = hsc_differential(z, spec);
    for (int a = 0; a < 4; ++a) {
      PhaseVec p = pack(z), m = pack(z);
      p[a] += h;
      m[a] -= h;
      const double fd = (hsc_energy(unpack(p, 2), spec) - hsc_energy(unpack(m, 2), spec)) / (2 * h);
      CHECK(std::abs(d[a] - fd) < 1e-8);
    }
  }
}

TEST_CASE("property: corrected flow conserves H_sc and is reversible") {
  const FlowSpec spec = geometric_spec(0.1, 1);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 3; ++i) {
    const PhasePoint z0 = random_point(rng);
    const Trajectory tr = integrate_flow(z0, 10.0, spec, 100);
    double drift = 0.0;
    for (double e : tr.energy) drift = std::max(drift, std::abs(e - tr.energy.front()));
    CHECK(drift / std::max(1.0, std::abs(tr.energy.front())) <= 1e-8);
    const PhasePoint back = flow_map(tr.back(), -10.0, spec);
    CHECK((pack(back) - pack(z0)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("cosine band under a constant force performs Bloch oscillations") {
  const double force = 0.7, hop = 0.5;
  const Lattice lat = Lattice::cubic(1, 1.0);
  ScalarField phi(1);
  PlateauPolyTerm p;
  p.center = Vec::Zero(1);
  p.halfwidth = Vec::Constant(1, 100.0);
  p.ramp = Vec::Constant(1, 10.0);
  p.poly.linear = Vec::Constant(1, -force);
  p.poly.quadratic = Mat::Zero(1, 1);
  phi.add(p);
  FlowSpec spec;
  spec.band = std::make_shared<CosineBand>(lat, 1.0, std::vector<double>{hop});
  spec.fields = ExternalFields(phi, {});
  const PhasePoint z0{Vec::Constant(1, 0.2), Vec::Constant(1, 0.4)};
  const double period = kTwoPi / force;
  const Trajectory tr = integrate_flow(z0, period, spec, 50);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.t[i];
    const double k = 0.4 + force * t;
    const double r = 0.2 + 2.0 * hop / force * (std::cos(0.4) - std::cos(k));
    CHECK(std::abs(tr.points[i].kappa[0] - k) < 1e-11);
    CHECK(std::abs(tr.points[i].r[0] - r) < 1e-10);
  }
  CHECK(std::abs(tr.back().r[0] - 0.2) < 1e-10);
}

TEST_CASE("free band in a uniform field moves on the cyclotron circle") {
  const double b = 1.3, v = 0.8;
  FlowSpec spec;
  spec.band = std::make_shared<FreeBand>(2);
  ScalarField a1(2);
  spec.fields = ExternalFields(ScalarField(2), {a1, uniform_a2(b)});
  const PhasePoint z0{v2(0.5, -0.3), v2(0.0, v)};
  const Trajectory tr = integrate_flow(z0, 6.0, spec, 100);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.t[i];
    CHECK(std::abs(tr.points[i].kappa[0] - v * std::sin(b * t)) < 1e-10);
    CHECK(std::abs(tr.points[i].kappa[1] - v * std::cos(b * t)) < 1e-10);
    CHECK(std::abs(tr.points[i].r[0] - (0.5 + v / b * (1.0 - std::cos(b * t)))) < 1e-10);
    CHECK(std::abs(tr.points[i].r[1] - (-0.3 + v / b * std::sin(b * t))) < 1e-10);
  }
}

TEST_CASE("implicit midpoint is second order and agrees with RK4") {
  const FlowSpec rk = geometric_spec(0.1, 1);
  const PhasePoint z0{v2(0.1, 0.2), v2(-0.5, 1.0)};
  const PhaseVec ref = pack(flow_map(z0, 2.0, rk));
  std::vector<double> err;
  for (double dt : {0.02, 0.01}) {
    FlowSpec mp = rk;
    mp.integrator = Integrator::ImplicitMidpoint;
    mp.dt = dt;
    err.push_back((pack(flow_map(z0, 2.0, mp)) - ref).norm());
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.2));
  CHECK(err[1] < 1e-4);
}

TEST_CASE("canonical and kinetic coordinates are inverse") {
  const FlowSpec spec = geometric_spec(0.1, 1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const PhasePoint z = random_point(rng);
    const CanonicalPoint c = to_canonical(z, spec.fields);
    CHECK((c.k - z.kappa - spec.fields.vector_potential(z.r)).norm() < 1e-15);
    const PhasePoint back = to_kinetic(c, spec.fields);
    CHECK((back.kappa - z.kappa).norm() < 1e-14);
  }
  const CanonicalPoint p{v2(0.3, 0.1), v2(1.0, -0.2)};
  const CanonicalPoint q = canonical_flow(p, 1.5, spec);
  const PhasePoint z = flow_map(to_kinetic(p, spec.fields), 1.5, spec);
  CHECK((q.r - z.r).norm() < 1e-14);
  CHECK((q.k - z.kappa - spec.fields.vector_potential(z.r)).norm() < 1e-14);
}

TEST_CASE("degenerate symplectic form is reported") {
  // Constant Ω₁₂ = w with uniform B₁₂ = b: det Θ = (1 - ε w b)².
  const double w = 2.0, b = 1.0;
  FlowSpec spec;
  spec.epsilon = 0.5;
  spec.order = 1;
  spec.band = std::make_shared<FunctionBand>(2, [w](const Vec& k) {
    BandPoint p(2);
    p.energy = 0.5 * k.squaredNorm();
    p.gradient = k;
    p.curvature(0, 1) = w;
    p.curvature(1, 0) = -w;
    return p;
  });
  spec.fields = ExternalFields(ScalarField(2), {ScalarField(2), uniform_a2(b)});
  const PhasePoint z{v2(0.0, 0.0), v2(1.0, 0.0)};
  try {
    flow_vector_field(z, spec);
    FAIL("degenerate form accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SymplecticDegeneracy);
  }
  try {
    integrate_flow(z, 1.0, spec);
    FAIL("trajectory through a degenerate point accepted");
  } catch (const TruncatedTrajectory& e) {
    CHECK(e.kind() == ErrorKind::TruncatedTrajectory);
    CHECK(e.partial().size() == 1);
  }
}

TEST_CASE("trajectory stopped by a failing band keeps its computed part") {
  // The band refuses κ₁ > 1; a unit force brings κ₁ there at t = 1.
  FlowSpec spec;
  spec.dt = 1e-3;
  spec.band = std::make_shared<FunctionBand>(2, [](const Vec& k) {
    if (k[0] > 1.0) throw Error(ErrorKind::Domain, "outside the band model");
    BandPoint p(2);
    p.energy = 0.5 * k.squaredNorm();
    p.gradient = k;
    return p;
  });
  ScalarField phi(2);
  PlateauPolyTerm push;
  push.center = v2(0.0, 0.0);
  push.halfwidth = v2(50.0, 50.0);
  push.ramp = v2(5.0, 5.0);
  push.poly.linear = v2(-1.0, 0.0);
  push.poly.quadratic = Mat::Zero(2, 2);
  phi.add(push);
  spec.fields = ExternalFields(phi, {});
  try {
    integrate_flow({v2(0.0, 0.0), v2(0.0, 0.0)}, 3.0, spec);
    FAIL("band failure not reported");
  } catch (const TruncatedTrajectory& e) {
    CHECK(e.partial().size() > 900);
    CHECK(e.partial().t.back() == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(std::string(e.what()).find("outside the band model") != std::string::npos);
  }
}

TEST_CASE("scenario flow conserves H_sc over t = 10") {
  const Scenario sc = load_scenario(support::scenario("flow_2d.scn"));
  const EgorovExperiment exp(sc, 1);
  FlowSpec spec;
  spec.epsilon = sc.flow_epsilon;
  spec.order = 1;
  spec.dt = 1e-3;
  spec.band = exp.band();
  spec.fields = sc.fields;
  for (const PhasePoint& z0 : sc.points) {
    const Trajectory tr = integrate_flow(z0, 10.0, spec, 100);
    double drift = 0.0;
    for (double e : tr.energy) drift = std::max(drift, std::abs(e - tr.energy.front()));
    CHECK(drift / std::max(1.0, std::abs(tr.energy.front())) <= 1e-8);
    CHECK((pack(flow_map(tr.back(), -10.0, spec)) - pack(z0)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, integrate_flow(sc.points[0], 0.01, spec), spec);
  CHECK(csv.str().find("H_sc") != std::string::npos);
}

TEST_CASE("interpolated band reproduces grid energies and spectral velocities") {
  const Scenario sc = load_scenario(support::scenario("cosine_1d.scn"));
  std::vector<double> consistency;
  for (int n : {64, 128}) {
    const GeometryGrid g = build_geometry_grid(sc.potential, sc.plane_wave_basis(), 1, {n});
    const InterpolatedBand band(g);
    for (std::size_t i = 0; i < g.size(); i += 5) {
      CHECK(std::abs(band.evaluate(g.k_points[i]).energy - g.energy[i]) < 1e-12);
      CHECK((band.interpolated_gradient(g.k_points[i]) - g.grad_energy[i]).norm() < 1e-10);
    }
    consistency.push_back(band.gradient_consistency());
  }
  // The spline derivative approaches the spectral velocity at third order.
  CHECK(consistency[1] < consistency[0] / 6.0);
}

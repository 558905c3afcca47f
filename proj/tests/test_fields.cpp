#include <doctest.h>

#include <cmath>
#include <random>

#include "semicl/errors.hpp"
#include "semicl/fields.hpp"

using namespace semicl;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ScalarField sample_field() {
  ScalarField f(2);
  f.add(ConstantTerm{0.3});
  f.add(TrigTerm{0.7, v2(1.1, -0.4), 0.2});
  GaussianPolyTerm g;
  g.center = v2(0.5, -0.2);
  g.width = 0.8;
  g.poly.c0 = 1.0;
  g.poly.linear = v2(0.3, -0.1);
  g.poly.quadratic = Mat::Identity(2, 2) * 0.4;
  f.add(g);
  PlateauPolyTerm p;
  p.center = v2(0.0, 0.0);
  p.halfwidth = v2(1.0, 0.7);
  p.ramp = v2(0.5, 0.6);
  p.poly.linear = v2(0.5, 0.25);
  f.add(p);
  return f;
}

}  // namespace

TEST_CASE("smooth step is C1 with the right limits") {
  CHECK(smooth_step(-0.3).value == 0.0);
  CHECK(smooth_step(1.4).value == 1.0);
  CHECK(smooth_step(0.5).value == doctest::Approx(0.5));
  const double h = 1e-6;
  for (double t : {0.1, 0.37, 0.8}) {
    const double fd = (smooth_step(t + h).value - smooth_step(t - h).value) / (2 * h);
    CHECK(smooth_step(t).d1 == doctest::Approx(fd).epsilon(1e-6));
    const double fd2 = (smooth_step(t + h).d1 - smooth_step(t - h).d1) / (2 * h);
    CHECK(smooth_step(t).d2 == doctest::Approx(fd2).epsilon(1e-5));
  }
}

TEST_CASE("plateau term is exactly its polynomial on the plateau and zero past the ramp") {
  ScalarField f(2);
  PlateauPolyTerm p;
  p.center = v2(1.0, -1.0);
  p.halfwidth = v2(2.0, 1.0);
  p.ramp = v2(0.5, 0.5);
  p.poly.c0 = 0.2;
  p.poly.linear = v2(0.5, -0.3);
  p.poly.quadratic = Mat::Identity(2, 2);
  f.add(p);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec d = v2(2.0 * u(rng), u(rng));
    const double expect = 0.2 + 0.5 * d[0] - 0.3 * d[1] + 0.5 * d.squaredNorm();
    CHECK(f.value(p.center + d) == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK(f.value(v2(3.6, -1.0)) == 0.0);
  CHECK(f.value(v2(1.0, 0.51)) == 0.0);
}

TEST_CASE("property: jets agree with finite differences") {
  const ScalarField f = sample_field();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  const double h = 1e-5;
  for (int i = 0; i < 40; ++i) {
    const Vec r = v2(u(rng), u(rng));
    const Jet j = f.jet(r);
    CHECK(j.value == doctest::Approx(f.value(r)));
    for (int a = 0; a < 2; ++a) {
      const Vec e = Vec::Unit(2, a) * h;
      const double fd = (f.value(r + e) - f.value(r - e)) / (2 * h);
      CHECK(std::abs(j.gradient[a] - fd) < 1e-7);
      const Vec dg = (f.gradient(r + e) - f.gradient(r - e)) / (2 * h);
      for (int b = 0; b < 2; ++b) CHECK(std::abs(j.hessian(b, a) - dg[b]) < 1e-6);
    }
    CHECK(std::abs(j.hessian(0, 1) - j.hessian(1, 0)) < 1e-12);
  }
}

TEST_CASE("property: the global bound dominates sampled values") {
  const ScalarField f = sample_field();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  const double b = f.bound();
  for (int i = 0; i < 2000; ++i) CHECK(std::abs(f.value(v2(u(rng), u(rng)))) <= b);
}

TEST_CASE("magnetic field is the antisymmetric curl of A") {
  ScalarField a1(2), a2(2);
  a1.add(TrigTerm{0.4, v2(0.0, 1.0), 0.3});
  a2.add(TrigTerm{0.3, v2(1.0, 0.5), -0.2});
  GaussianPolyTerm g;
  g.center = v2(0.2, 0.1);
  g.width = 1.2;
  g.poly.c0 = 0.5;
  a2.add(g);
  const ExternalFields fields(ScalarField(2), {a1, a2});
  CHECK(fields.has_vector_potential());
  const double h = 1e-5;
  for (const Vec& r : {v2(0.0, 0.0), v2(0.7, -1.1), v2(-1.5, 0.4)}) {
    const Mat b = fields.magnetic_field(r);
    const double d1a2 = (a2.value(r + v2(h, 0)) - a2.value(r - v2(h, 0))) / (2 * h);
    const double d2a1 = (a1.value(r + v2(0, h)) - a1.value(r - v2(0, h))) / (2 * h);
    CHECK(b(0, 1) == doctest::Approx(d1a2 - d2a1).epsilon(1e-7));
    CHECK(b(1, 0) == doctest::Approx(-b(0, 1)));
    CHECK(b(0, 0) == 0.0);
    const auto db = fields.magnetic_field_gradient(r);
    for (int m = 0; m < 2; ++m) {
      const Vec e = Vec::Unit(2, m) * h;
      const double fd = (fields.magnetic_field(r + e)(0, 1) - fields.magnetic_field(r - e)(0, 1)) / (2 * h);
      CHECK(std::abs(db[static_cast<std::size_t>(m)](0, 1) - fd) < 1e-6);
    }
  }
}

TEST_CASE("field terms with wrong rank are configuration errors") {
  ScalarField f(2);
  CHECK_THROWS_AS(f.add(TrigTerm{1.0, Vec::Ones(1), 0.0}), Error);
  GaussianPolyTerm g;
  g.center = v2(0, 0);
  g.width = -1.0;
  CHECK_THROWS_AS(f.add(g), Error);
}

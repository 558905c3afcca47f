#include <doctest.h>

#include <cmath>
#include <vector>

#include "semicl/errors.hpp"
#include "semicl/spline.hpp"

using namespace semicl;

namespace {

double f1(double x) { return std::sin(kTwoPi * x) + 0.3 * std::cos(2.0 * kTwoPi * x); }
double df1(double x) { return kTwoPi * std::cos(kTwoPi * x) - 0.6 * kTwoPi * std::sin(2.0 * kTwoPi * x); }

double spline_error_1d(int n) {
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(f1(static_cast<double>(i) / n));
  const PeriodicSpline sp({n}, s);
  double err = 0.0;
  for (int i = 0; i < 997; ++i) {
    const double x = (i + 0.37) / 997.0;
    err = std::max(err, std::abs(sp.value(Vec::Constant(1, x)) - f1(x)));
  }
  return err;
}

}  // namespace

TEST_CASE("spline interpolates its samples") {
  const int n = 12;
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(f1(static_cast<double>(i) / n));
  const PeriodicSpline sp({n}, s);
  for (int i = 0; i < n; ++i) CHECK(sp.value(Vec::Constant(1, static_cast<double>(i) / n)) == doctest::Approx(s[i]).epsilon(1e-12));
  // Periodicity, including points outside [0, 1).
  CHECK(sp.value(Vec::Constant(1, 1.3)) == doctest::Approx(sp.value(Vec::Constant(1, 0.3))).epsilon(1e-12));
  CHECK(sp.value(Vec::Constant(1, -0.2)) == doctest::Approx(sp.value(Vec::Constant(1, 0.8))).epsilon(1e-12));
}

TEST_CASE("cubic spline error falls as h^4") {
  const double e1 = spline_error_1d(32);
  const double e2 = spline_error_1d(64);
  const double rate = std::log2(e1 / e2);
  CHECK(rate > 3.7);
  CHECK(rate < 4.3);
}

TEST_CASE("derivatives match the analytic function in 2D") {
  const int n = 64;
  auto f = [](double x, double y) { return std::cos(kTwoPi * x) * std::sin(kTwoPi * y) + 0.2 * std::sin(kTwoPi * (x + y)); };
  auto fx = [](double x, double y) {
    return -kTwoPi * std::sin(kTwoPi * x) * std::sin(kTwoPi * y) + 0.2 * kTwoPi * std::cos(kTwoPi * (x + y));
  };
  auto fxy = [](double x, double y) {
    return -kTwoPi * kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y) - 0.2 * kTwoPi * kTwoPi * std::sin(kTwoPi * (x + y));
  };
  std::vector<double> s;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s.push_back(f(static_cast<double>(i) / n, static_cast<double>(j) / n));
  }
  const PeriodicSpline sp({n, n}, s);
  for (double x : {0.11, 0.52, 0.93}) {
    for (double y : {0.07, 0.41}) {
      Vec p(2);
      p << x, y;
      const auto e = sp.evaluate(p);
      CHECK(std::abs(e.value - f(x, y)) < 1e-5);
      CHECK(std::abs(e.gradient[0] - fx(x, y)) < 2e-3);
      CHECK(std::abs(e.hessian(0, 1) - fxy(x, y)) < 0.1);
      CHECK(e.hessian(0, 1) == doctest::Approx(e.hessian(1, 0)));
    }
  }
}

TEST_CASE("first derivative of the 1D spline converges") {
  const int n = 128;
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(f1(static_cast<double>(i) / n));
  const PeriodicSpline sp({n}, s);
  for (double x : {0.05, 0.33, 0.71}) CHECK(std::abs(sp.evaluate(Vec::Constant(1, x)).gradient[0] - df1(x)) < 1e-3);
}

TEST_CASE("spline refuses tiny grids") {
  CHECK_THROWS_AS(PeriodicSpline({3}, {1.0, 2.0, 3.0}), Error);
  CHECK_THROWS_AS(PeriodicSpline({4}, {1.0, 2.0, 3.0}), Error);
}

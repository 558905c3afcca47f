#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "semicl/errors.hpp"
#include "semicl/lattice.hpp"
#include "support.hpp"

using namespace semicl;

namespace {

Lattice hexagonal() {
  Mat b(2, 2);
  b << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
  return Lattice(b);
}

// Lowest values of ½|k + G|² over a brute-force box of dual indices.
std::vector<double> free_levels(const Lattice& lat, const Vec& k, int count) {
  std::vector<double> e;
  const int r = 8;
  if (lat.dim() == 1) {
    for (int i = -r; i <= r; ++i) e.push_back(0.5 * (k + lat.dual_basis().col(0) * i).squaredNorm());
  } else {
    for (int i = -r; i <= r; ++i) {
      for (int j = -r; j <= r; ++j) {
        e.push_back(0.5 * (k + lat.dual_basis().col(0) * i + lat.dual_basis().col(1) * j).squaredNorm());
      }
    }
  }
  std::sort(e.begin(), e.end());
  e.resize(static_cast<std::size_t>(count));
  return e;
}

}  // namespace

TEST_CASE("dual basis satisfies gamma_i . gamma*_j = 2 pi delta_ij") {
  for (const Lattice& lat : {Lattice::cubic(1, 0.7), Lattice::cubic(2, 1.3), hexagonal()}) {
    const Mat prod = lat.basis().transpose() * lat.dual_basis();
    const Mat expect = kTwoPi * Mat::Identity(lat.dim(), lat.dim());
    CHECK((prod - expect).norm() < 1e-13);
    CHECK(lat.cell_volume() * lat.bz_volume() == doctest::Approx(std::pow(kTwoPi, lat.dim())));
  }
}

TEST_CASE("degenerate and unsupported lattices are refused") {
  Mat b(2, 2);
  b << 1.0, 2.0, 1.0, 2.0;
  CHECK_THROWS_AS(Lattice{b}, Error);
  try {
    Lattice l(b);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLattice);
  }
  try {
    Lattice l(Mat::Identity(3, 3));
    FAIL("3D lattice accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDimension);
  }
}

TEST_CASE("fold_to_zone lands in the centred zone and differs by a dual vector") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const Lattice lat = hexagonal();
  for (int t = 0; t < 200; ++t) {
    Vec k(2);
    k << u(rng), u(rng);
    const Vec f = lat.to_fractional_k(lat.fold_to_zone(k));
    CHECK(f.minCoeff() >= -0.5 - 1e-12);
    CHECK(f.maxCoeff() < 0.5 + 1e-12);
    const Vec shift = lat.to_fractional_k(k) - f;
    CHECK(std::abs(shift[0] - std::round(shift[0])) < 1e-12);
    CHECK(std::abs(shift[1] - std::round(shift[1])) < 1e-12);
  }
}

TEST_CASE("reality condition of the potential coefficients") {
  const Lattice lat = Lattice::cubic(1, 1.0);
  FourierPotential::CoefficientMap c;
  c[{1, 0}] = {0.3, 0.1};
  c[{-1, 0}] = {0.3, 0.1};
  CHECK_THROWS_AS(FourierPotential(lat, c), Error);
  c[{-1, 0}] = {0.3, -0.1};
  const FourierPotential v(lat, c);
  // V(y) = 2 Re(V̂_1 e^{2πiy})
  for (double y : {0.0, 0.13, 0.5, 0.77}) {
    Vec p = Vec::Constant(1, y);
    CHECK(v.value(p) == doctest::Approx(2.0 * (0.3 * std::cos(kTwoPi * y) - 0.1 * std::sin(kTwoPi * y))));
  }
}

TEST_CASE("plane-wave basis is closed under negation and ordered by |G|") {
  const PlaneWaveBasis b(hexagonal(), 3.0 * kTwoPi);
  CHECK(b.find(IVec::Zero(2)) == 0);
  double last = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    CHECK(b.find(IVec(-b.indices()[static_cast<std::size_t>(i)])) >= 0);
    const double g = b.g_vectors()[static_cast<std::size_t>(i)].norm();
    CHECK(g <= 3.0 * kTwoPi + 1e-12);
    CHECK(g >= last - 1e-12);
    last = g;
  }
  std::vector<IVec> bad{IVec::Zero(2), IVec::Ones(2)};
  CHECK_THROWS_AS(PlaneWaveBasis(hexagonal(), bad), Error);
}

TEST_CASE("V = 0 bands equal sorted free-particle levels on 1D and 2D grids") {
  for (const Lattice& lat : {Lattice::cubic(1, 1.0), hexagonal()}) {
    const int nb = lat.dim() == 1 ? 6 : 8;
    const PlaneWaveBasis basis = PlaneWaveBasis::for_bands(lat, nb);
    const FourierPotential zero = FourierPotential::zero(lat);
    std::vector<int> grid(static_cast<std::size_t>(lat.dim()), lat.dim() == 1 ? 33 : 9);
    double worst = 0.0;
    for (const Vec& g : brillouin_grid(lat, grid)) {
      const Vec k = g - lat.dual_basis() * Vec::Constant(lat.dim(), 0.5);
      const BlochFiber fb = solve_fiber(k, zero, basis, nb);
      const auto levels = free_levels(lat, k, nb);
      for (int n = 1; n <= nb; ++n) worst = std::max(worst, std::abs(fb.energy(n) - levels[static_cast<std::size_t>(n - 1)]));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("weak cosine potential opens a zone-edge gap of 2|v|") {
  // Degenerate perturbation theory: |k| = |k - G| = π couple through V̂_1 = v.
  for (double v : {0.05, 0.02}) {
    const FourierPotential pot = support::cosine_1d(v);
    const PlaneWaveBasis basis = PlaneWaveBasis::for_bands(pot.lattice(), 4);
    const BlochFiber fb = solve_fiber(Vec::Constant(1, kPi), pot, basis, 2);
    const double gap = fb.energy(2) - fb.energy(1);
    CHECK(std::abs(gap - 2.0 * v) <= 0.05 * 2.0 * v);
    // Second order: both levels shift down by about v²/(2π²·(…)), the midpoint
    // stays near the free value.
    CHECK(0.5 * (fb.energy(1) + fb.energy(2)) == doctest::Approx(0.5 * kPi * kPi).epsilon(1e-3));
  }
}

TEST_CASE("eigenpairs solve the fiber Hamiltonian") {
  const FourierPotential pot = support::broken_square();
  const PlaneWaveBasis basis(pot.lattice(), 5.0 * kTwoPi);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vec k = support::random_k(pot.lattice(), rng);
    const Eigen::MatrixXcd h = bloch_hamiltonian(k, pot, basis);
    CHECK((h - h.adjoint()).norm() < 1e-13);
    const BlochFiber fb = solve_fiber(k, pot, basis, 4);
    for (int n = 1; n <= 4; ++n) {
      const Eigen::VectorXcd v = fb.vector(n);
      CHECK(std::abs(v.norm() - 1.0) < 1e-12);
      CHECK((h * v - fb.energy(n) * v).norm() < 1e-10);
    }
  }
}

TEST_CASE("property: bands are zone periodic and even in k for a real potential") {
  const FourierPotential pot = support::broken_square();
  const PlaneWaveBasis basis(pot.lattice(), 7.0 * kTwoPi);
  std::mt19937_64 rng(5);
  const Lattice& lat = pot.lattice();
  for (int t = 0; t < 10; ++t) {
    const Vec k = support::random_k(lat, rng);
    const BlochFiber a = solve_fiber(k, pot, basis, 3);
    const BlochFiber minus = solve_fiber(-k, pot, basis, 3);
    const BlochFiber shifted = solve_fiber(k + lat.dual_basis().col(0) - lat.dual_basis().col(1), pot, basis, 3);
    for (int n = 1; n <= 3; ++n) {
      CHECK(std::abs(a.energy(n) - minus.energy(n)) < 1e-11);
      CHECK(std::abs(a.energy(n) - shifted.energy(n)) < 1e-8);
    }
  }
}

TEST_CASE("min_gap refuses a closed gap") {
  const Lattice lat = Lattice::cubic(1, 1.0);
  const FourierPotential zero = FourierPotential::zero(lat);
  const PlaneWaveBasis basis = PlaneWaveBasis::for_bands(lat, 3);
  const std::vector<Vec> ks{Vec::Constant(1, 0.0), Vec::Constant(1, kPi)};
  try {
    min_gap(1, zero, basis, ks);
    FAIL("closed gap accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GapClosure);
  }
  const FourierPotential pot = support::cosine_1d(0.05);
  CHECK(min_gap(1, pot, basis, ks) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("brillouin_grid ordering is row-major with the last axis fastest") {
  const Lattice lat = Lattice::cubic(2, 1.0);
  const auto ks = brillouin_grid(lat, {3, 4});
  REQUIRE(ks.size() == 12);
  CHECK(ks[1][1] == doctest::Approx(0.25 * kTwoPi));
  CHECK(ks[4][0] == doctest::Approx(kTwoPi / 3.0));
}

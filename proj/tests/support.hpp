#pragma once

#include <random>
#include <string>

#include "semicl/lattice.hpp"

namespace support {

inline std::string scenario(const std::string& name) { return std::string(SEMICL_SCENARIO_DIR) + "/" + name; }

// V = cos(G1 y) + 0.6 cos(G2 y) - 0.8 sin((G1 + G2) y) on the unit square lattice.
inline semicl::FourierPotential broken_square() {
  const auto lat = semicl::Lattice::cubic(2, 1.0);
  semicl::FourierPotential::CoefficientMap c;
  c[{1, 0}] = {0.5, 0.0};
  c[{-1, 0}] = {0.5, 0.0};
  c[{0, 1}] = {0.3, 0.0};
  c[{0, -1}] = {0.3, 0.0};
  c[{1, 1}] = {0.0, 0.4};
  c[{-1, -1}] = {0.0, -0.4};
  return semicl::FourierPotential(lat, c);
}

// Same shape with real coefficients, so V(-y) = V(y).
inline semicl::FourierPotential symmetric_square() {
  const auto lat = semicl::Lattice::cubic(2, 1.0);
  semicl::FourierPotential::CoefficientMap c;
  c[{1, 0}] = {0.5, 0.0};
  c[{-1, 0}] = {0.5, 0.0};
  c[{0, 1}] = {0.3, 0.0};
  c[{0, -1}] = {0.3, 0.0};
  c[{1, 1}] = {0.2, 0.0};
  c[{-1, -1}] = {0.2, 0.0};
  return semicl::FourierPotential(lat, c);
}

inline semicl::FourierPotential cosine_1d(double v) {
  const auto lat = semicl::Lattice::cubic(1, 1.0);
  semicl::FourierPotential::CoefficientMap c;
  c[{1, 0}] = {v, 0.0};
  c[{-1, 0}] = {v, 0.0};
  return semicl::FourierPotential(lat, c);
}

inline semicl::Vec random_k(const semicl::Lattice& lat, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  semicl::Vec f(lat.dim());
  for (int j = 0; j < lat.dim(); ++j) f[j] = u(rng);
  return lat.dual_basis() * f;
}

}  // namespace support

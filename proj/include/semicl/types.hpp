#pragma once

#include <array>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace semicl {

using cplx = std::complex<double>;

// Spatial dimension is 1 or 2 everywhere in the library; the fixed-capacity
// Eigen types keep small vectors off the heap in the flow hot loop.
inline constexpr int kMaxDim = 2;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using IVec = Eigen::Matrix<int, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using PhaseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;
using PhaseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2 * kMaxDim, 2 * kMaxDim>;

/// Integer index tuple padded to kMaxDim; used as an ordered map key.
using IndexKey = std::array<int, kMaxDim>;

inline IndexKey to_key(const IVec& v) {
  IndexKey key{0, 0};
  for (int i = 0; i < v.size(); ++i) key[static_cast<std::size_t>(i)] = v[i];
  return key;
}

inline IVec from_key(const IndexKey& key, int dim) {
  IVec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = key[static_cast<std::size_t>(i)];
  return v;
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace semicl

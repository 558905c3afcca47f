#pragma once

#include <vector>

#include "semicl/types.hpp"

namespace semicl {

/// Periodic cubic B-spline interpolant of samples on the unit torus in d = 1
/// or 2 (fractional coordinates, node i at i / N, row-major samples).
class PeriodicSpline {
 public:
  struct Sample {
    double value = 0.0;
    Vec gradient;  ///< with respect to fractional coordinates
    Mat hessian;
  };

  PeriodicSpline() = default;
  PeriodicSpline(std::vector<int> n, const std::vector<double>& samples);

  int dim() const { return static_cast<int>(n_.size()); }
  const std::vector<int>& shape() const { return n_; }
  double value(const Vec& f) const { return evaluate(f).value; }
  Sample evaluate(const Vec& f) const;

 private:
  std::vector<int> n_;
  std::vector<double> coeff_;
};

}  // namespace semicl

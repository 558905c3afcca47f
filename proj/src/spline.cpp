#include "semicl/spline.hpp"

#include <cmath>

#include "semicl/errors.hpp"
#include "semicl/fft.hpp"

namespace semicl {

namespace {

struct Basis4 {
  int first;             // index of the leftmost contributing node
  double w[4], d1[4], d2[4];
};

// Uniform cubic B-spline weights around x measured in node units.
Basis4 weights(double x, int n) {
  const double fl = std::floor(x);
  const double t = x - fl;
  Basis4 b{};
  b.first = static_cast<int>(fl) - 1;
  const double t2 = t * t, t3 = t2 * t;
  b.w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  b.w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  b.w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  b.w[3] = t3 / 6.0;
  b.d1[0] = -0.5 * (1.0 - t) * (1.0 - t);
  b.d1[1] = -2.0 * t + 1.5 * t2;
  b.d1[2] = 0.5 + t - 1.5 * t2;
  b.d1[3] = 0.5 * t2;
  b.d2[0] = 1.0 - t;
  b.d2[1] = -2.0 + 3.0 * t;
  b.d2[2] = 1.0 - 3.0 * t;
  b.d2[3] = t;
  for (int i = 0; i < 4; ++i) {
    b.d1[i] *= n;
    b.d2[i] *= static_cast<double>(n) * n;
  }
  return b;
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

PeriodicSpline::PeriodicSpline(std::vector<int> n, const std::vector<double>& samples) : n_(std::move(n)) {
  if (n_.empty() || n_.size() > 2) throw Error(ErrorKind::UnsupportedDimension, "spline needs d = 1 or 2");
  std::size_t total = 1;
  for (int v : n_) {
    if (v < 4) throw Error(ErrorKind::Config, "spline needs at least 4 nodes per axis");
    total *= static_cast<std::size_t>(v);
  }
  if (samples.size() != total) throw Error(ErrorKind::Config, "spline sample count does not match the grid");

  // Interpolation conditions are circulant per axis: (c[i-1] + 4c[i] + c[i+1]) / 6 = f[i].
  std::vector<cplx> work(samples.begin(), samples.end());
  FftPlan forward(n_, FFTW_FORWARD);
  FftPlan backward(n_, FFTW_BACKWARD);
  forward.execute(work);
  const int n0 = n_[0];
  const int n1 = n_.size() > 1 ? n_[1] : 1;
  for (int i = 0; i < n0; ++i) {
    const double s0 = (4.0 + 2.0 * std::cos(kTwoPi * i / n0)) / 6.0;
    for (int j = 0; j < n1; ++j) {
      const double s1 = n_.size() > 1 ? (4.0 + 2.0 * std::cos(kTwoPi * j / n1)) / 6.0 : 1.0;
      work[static_cast<std::size_t>(i * n1 + j)] /= s0 * s1;
    }
  }
  backward.execute(work);
  coeff_.resize(total);
  for (std::size_t s = 0; s < total; ++s) coeff_[s] = work[s].real() / static_cast<double>(total);
}

PeriodicSpline::Sample PeriodicSpline::evaluate(const Vec& f) const {
  const int d = dim();
  Sample out;
  out.gradient = Vec::Zero(d);
  out.hessian = Mat::Zero(d, d);
  const Basis4 b0 = weights(f[0] * n_[0], n_[0]);
  if (d == 1) {
    for (int a = 0; a < 4; ++a) {
      const double c = coeff_[static_cast<std::size_t>(wrap(b0.first + a, n_[0]))];
      out.value += b0.w[a] * c;
      out.gradient[0] += b0.d1[a] * c;
      out.hessian(0, 0) += b0.d2[a] * c;
    }
    return out;
  }
  const Basis4 b1 = weights(f[1] * n_[1], n_[1]);
  for (int a = 0; a < 4; ++a) {
    const std::size_t row = static_cast<std::size_t>(wrap(b0.first + a, n_[0])) * static_cast<std::size_t>(n_[1]);
    for (int b = 0; b < 4; ++b) {
      const double c = coeff_[row + static_cast<std::size_t>(wrap(b1.first + b, n_[1]))];
      out.value += b0.w[a] * b1.w[b] * c;
      out.gradient[0] += b0.d1[a] * b1.w[b] * c;
      out.gradient[1] += b0.w[a] * b1.d1[b] * c;
      out.hessian(0, 0) += b0.d2[a] * b1.w[b] * c;
      out.hessian(1, 1) += b0.w[a] * b1.d2[b] * c;
      out.hessian(0, 1) += b0.d1[a] * b1.d1[b] * c;
    }
  }
  out.hessian(1, 0) = out.hessian(0, 1);
  return out;
}

}  // namespace semicl

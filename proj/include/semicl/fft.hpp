#pragma once

#include <vector>

#include <fftw3.h>

#include "semicl/types.hpp"

namespace semicl {

/// Owning wrapper around an FFTW plan for a batch of contiguous d-dimensional
/// complex transforms. Unnormalised; sign -1 is forward (e^{-i...}).
class FftPlan {
 public:
  FftPlan() = default;
  /// `shape` is row-major (last axis fastest); `batch` transforms are laid out
  /// back to back.
  FftPlan(std::vector<int> shape, int sign, int batch = 1);
  ~FftPlan();

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept;
  FftPlan& operator=(FftPlan&& other) noexcept;

  /// Plans are made in place, so `in` and `out` must be the same buffer of
  /// batch × size elements.
  void execute(cplx* in, cplx* out) const;
  void execute(std::vector<cplx>& data) const { execute(data.data(), data.data()); }

  std::size_t size() const { return size_; }

 private:
  fftw_plan plan_ = nullptr;
  std::size_t size_ = 0;
  int batch_ = 1;
};

/// Signed FFT frequency index of position i on an axis of length n.
inline int fft_frequency(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

/// Position of a signed frequency on an axis of length n.
inline int fft_position(int freq, int n) { return ((freq % n) + n) % n; }

}  // namespace semicl

#include "semicl/fft.hpp"

#include <mutex>
#include <numeric>
#include <utility>

#include "semicl/errors.hpp"

namespace semicl {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(std::vector<int> shape, int sign, int batch) : batch_(batch) {
  size_ = 1;
  for (int n : shape) {
    if (n <= 0) throw Error(ErrorKind::Config, "FFT axis length must be positive");
    size_ *= static_cast<std::size_t>(n);
  }
  std::vector<cplx> scratch(size_ * static_cast<std::size_t>(batch));
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_ = fftw_plan_many_dft(static_cast<int>(shape.size()), shape.data(), batch, buf, nullptr, 1,
                             static_cast<int>(size_), buf, nullptr, 1, static_cast<int>(size_), sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan_ == nullptr) throw Error(ErrorKind::Config, "FFTW could not create a plan");
}

FftPlan::~FftPlan() {
  if (plan_ != nullptr) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
}

FftPlan::FftPlan(FftPlan&& other) noexcept
    : plan_(std::exchange(other.plan_, nullptr)), size_(other.size_), batch_(other.batch_) {}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    if (plan_ != nullptr) {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    plan_ = std::exchange(other.plan_, nullptr);
    size_ = other.size_;
    batch_ = other.batch_;
  }
  return *this;
}

void FftPlan::execute(cplx* in, cplx* out) const {
  fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
}

}  // namespace semicl

#include "fft.hpp"

#include <mutex>
#include <stdexcept>

namespace difftomo {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(const std::vector<int>& dims) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<std::complex<double>> scratch(total);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  // FFTW wants the slowest axis first; our axis 0 is the fastest.
  std::vector<int> n(dims.rbegin(), dims.rend());
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, FFTW_BACKWARD, flags);
  if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed");
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

void FftPlan::forward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(forward_, p, p);
}

void FftPlan::backward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(backward_, p, p);
}

}  // namespace difftomo

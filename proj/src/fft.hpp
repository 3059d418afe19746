#pragma once

#include <complex>
#include <vector>

#include <fftw3.h>

namespace difftomo {

// In-place complex FFT of fixed extents. Plans are created once under a global
// lock; execution through the new-array interface is thread-safe, so one plan
// serves every worker with its own buffer.
class FftPlan {
 public:
  explicit FftPlan(const std::vector<int>& dims);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void forward(std::complex<double>* data) const;
  /// Unnormalised inverse transform.
  void backward(std::complex<double>* data) const;

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace difftomo

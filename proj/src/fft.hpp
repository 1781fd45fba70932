#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace spiro::detail {

// Real-to-complex forward transform of length n; returns n/2 + 1 bins.
// FFTW plans are created under a process-wide lock and cached per length;
// execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<const double> input, std::vector<std::complex<double>>& out);

 private:
  std::size_t n_;
  void* plan_;
  double* in_;
  void* out_;
};

}  // namespace spiro::detail

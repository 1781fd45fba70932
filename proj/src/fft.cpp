#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace spiro::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("fft length must be positive");
  in_ = fftw_alloc_real(n);
  auto* out = fftw_alloc_complex(n / 2 + 1);
  out_ = out;
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(in_);
  fftw_free(out_);
}

void RealFft::forward(std::span<const double> input, std::vector<std::complex<double>>& out) {
  const std::size_t copy = std::min(input.size(), n_);
  std::copy_n(input.begin(), copy, in_);
  std::fill(in_ + copy, in_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* res = static_cast<const fftw_complex*>(out_);
  out.resize(n_ / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {res[k][0], res[k][1]};
}

}  // namespace spiro::detail

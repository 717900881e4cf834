#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "fpm/errors.hpp"

namespace fpm::detail {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the lifetime of the process.
PlanPair plans_for(int rows, int cols) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto [it, inserted] = cache.try_emplace({rows, cols});
  if (inserted) {
    const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const auto nc = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols / 2 + 1);
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(nc);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    it->second.forward = fftw_plan_dft_r2c_2d(rows, cols, real, cplx, flags);
    it->second.inverse = fftw_plan_dft_c2r_2d(rows, cols, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (!it->second.forward || !it->second.inverse) {
      cache.erase(it);
      throw ParameterError("FFTW could not plan transform");
    }
  }
  return it->second;
}

}  // namespace

RealFft2d::RealFft2d(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw ParameterError("FFT extent must be positive");
  const auto p = plans_for(rows, cols);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft2d::forward(std::span<const double> in, Spectrum& out) const {
  if (in.size() != real_size()) throw ParameterError("FFT input size mismatch");
  out.resize(spectrum_size());
  // FFTW's r2c does not modify its input; the signature is merely non-const.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft2d::inverse(Spectrum& in, std::span<double> out) const {
  if (in.size() != spectrum_size() || out.size() != real_size()) {
    throw ParameterError("FFT inverse size mismatch");
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(real_size());
  for (double& v : out) v *= scale;
}

int next_fast_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace fpm::detail

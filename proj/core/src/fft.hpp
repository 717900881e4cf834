#pragma once

// Thin wrapper over FFTW's real 2-D transforms. Plans are created once per
// shape under a global lock; execution is lock-free and thread-safe.

#include <complex>
#include <span>
#include <vector>

namespace fpm::detail {

using Spectrum = std::vector<std::complex<double>>;

class RealFft2d {
 public:
  RealFft2d(int rows, int cols);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t real_size() const noexcept {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  std::size_t spectrum_size() const noexcept {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_ / 2 + 1);
  }

  /// `in` is rows x cols, row-major. Output spectrum is unnormalized.
  void forward(std::span<const double> in, Spectrum& out) const;
  /// Destroys `in`. Output is scaled by 1 / (rows * cols).
  void inverse(Spectrum& in, std::span<double> out) const;

 private:
  int rows_;
  int cols_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// Smallest integer >= n whose only prime factors are 2, 3, 5, 7.
int next_fast_size(int n);

}  // namespace fpm::detail

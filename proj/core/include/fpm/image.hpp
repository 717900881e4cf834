#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpm/errors.hpp"

namespace fpm {

/// Row-major 2-D grid addressed as (x, y) with x the column and y the row,
/// origin at the top-left pixel.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ParameterError("grid data length does not match width * height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  std::span<const T> row(int y) const noexcept {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }
  std::span<T> row(int y) noexcept {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) throw ParameterError("grid dimensions must be >= 1");
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Grayscale intensities, nominally in [0, 1].
using Image = Grid<double>;

/// Per-pixel validity flags (1 = valid).
using Mask = Grid<std::uint8_t>;

/// An image whose pixels may be partially invalid, e.g. after rotation.
struct MaskedImage {
  Image image;
  Mask valid;

  std::size_t valid_count() const noexcept;
};

/// Spatial derivatives of a Gaussian-smoothed image.
struct GradientField {
  Image gx;
  Image gy;
  double sigma = 0.0;
};

/// Throws ParameterError unless every intensity is finite.
void require_finite(const Image& img);

/// Sampled, normalized Gaussian truncated at radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with edge replication. sigma == 0 is the identity.
Image gaussian_smooth(const Image& img, double sigma);

/// Central differences of gaussian_smooth(img, sigma), one-sided at borders.
/// Requires at least 3 pixels along each axis.
GradientField gradient(const Image& img, double sigma);

/// Derivatives of an already smoothed image (no further blur).
GradientField finite_differences(const Image& smoothed);

/// Bilinear blend of the four pixels around (x, y). Throws SamplingError when
/// (x, y) lies outside [0, w-1] x [0, h-1].
double sample_bilinear(const Image& img, double x, double y);

/// Same as sample_bilinear but returns false instead of throwing.
bool try_sample_bilinear(const Image& img, double x, double y, double& out) noexcept;

/// Rotates the content by theta radians about the image center
/// ((w-1)/2, (h-1)/2); a source point p lands at c + R(theta)(p - c).
/// Output pixels whose pre-image falls outside the source are invalid
/// and hold 0.
MaskedImage rotate_image(const Image& img, double theta);

/// a * img + b, pixelwise.
Image affine_intensity(const Image& img, double a, double b);

/// Copies the w x h window whose top-left corner is (x0, y0).
Image crop(const Image& img, int x0, int y0, int w, int h);

}  // namespace fpm

#include "fpm/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fpm {

namespace {

// Coordinates within this distance of the domain are snapped onto it, so
// that lattice points survive floating-point noise from rotations.
constexpr double kDomainSlack = 1e-9;

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

std::size_t MaskedImage::valid_count() const noexcept {
  std::size_t n = 0;
  for (auto v : valid.data()) n += v != 0;
  return n;
}

void require_finite(const Image& img) {
  for (double v : img.data()) {
    if (!std::isfinite(v)) throw ParameterError("image contains non-finite intensity");
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw ParameterError("sigma must be finite and >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-static_cast<double>(i * i) * inv);
  }
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_smooth(const Image& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (kernel.size() == 1) return img;

  const int w = img.width();
  const int h = img.height();
  const int r = static_cast<int>(kernel.size() / 2);

  Image tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const auto src = img.row(y);
    auto dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        acc += kernel[static_cast<std::size_t>(k + r)] * src[static_cast<std::size_t>(clamp_index(x + k, w))];
      }
      dst[static_cast<std::size_t>(x)] = acc;
    }
  }

  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    auto dst = out.row(y);
    for (int k = -r; k <= r; ++k) {
      const double kv = kernel[static_cast<std::size_t>(k + r)];
      const auto src = tmp.row(clamp_index(y + k, h));
      for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(x)] += kv * src[static_cast<std::size_t>(x)];
    }
  }
  return out;
}

GradientField finite_differences(const Image& s) {
  const int w = s.width();
  const int h = s.height();
  if (w < 3 || h < 3) throw ParameterError("gradient requires an image of at least 3x3 pixels");

  GradientField g{Image(w, h), Image(w, h), 0.0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0) {
        g.gx(x, y) = s(1, y) - s(0, y);
      } else if (x == w - 1) {
        g.gx(x, y) = s(w - 1, y) - s(w - 2, y);
      } else {
        g.gx(x, y) = 0.5 * (s(x + 1, y) - s(x - 1, y));
      }
      if (y == 0) {
        g.gy(x, y) = s(x, 1) - s(x, 0);
      } else if (y == h - 1) {
        g.gy(x, y) = s(x, h - 1) - s(x, h - 2);
      } else {
        g.gy(x, y) = 0.5 * (s(x, y + 1) - s(x, y - 1));
      }
    }
  }
  return g;
}

GradientField gradient(const Image& img, double sigma) {
  if (img.width() < 3 || img.height() < 3) {
    throw ParameterError("gradient requires an image of at least 3x3 pixels");
  }
  auto g = finite_differences(gaussian_smooth(img, sigma));
  g.sigma = sigma;
  return g;
}

bool try_sample_bilinear(const Image& img, double x, double y, double& out) noexcept {
  const double xmax = img.width() - 1;
  const double ymax = img.height() - 1;
  if (!(x >= -kDomainSlack && y >= -kDomainSlack && x <= xmax + kDomainSlack &&
        y <= ymax + kDomainSlack)) {
    return false;
  }
  x = std::clamp(x, 0.0, xmax);
  y = std::clamp(y, 0.0, ymax);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img(x0, y0) + fx * img(x1, y0);
  const double bottom = (1.0 - fx) * img(x0, y1) + fx * img(x1, y1);
  out = (1.0 - fy) * top + fy * bottom;
  return true;
}

double sample_bilinear(const Image& img, double x, double y) {
  double v = 0.0;
  if (!try_sample_bilinear(img, x, y, v)) throw SamplingError("bilinear sample outside image");
  return v;
}

MaskedImage rotate_image(const Image& img, double theta) {
  if (!std::isfinite(theta)) throw ParameterError("rotation angle must be finite");
  const int w = img.width();
  const int h = img.height();
  MaskedImage out{Image(w, h), Mask(w, h)};
  if (theta == 0.0) {
    out.image = img;
    out.valid = Mask(w, h, 1);
    return out;
  }
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int y = 0; y < h; ++y) {
    const double dy = y - cy;
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      // Inverse rotation R(-theta) maps the output pixel back to the source.
      const double sx = cx + c * dx + s * dy;
      const double sy = cy - s * dx + c * dy;
      double v = 0.0;
      if (try_sample_bilinear(img, sx, sy, v)) {
        out.image(x, y) = v;
        out.valid(x, y) = 1;
      }
    }
  }
  return out;
}

Image affine_intensity(const Image& img, double a, double b) {
  Image out = img;
  for (double& v : out.data()) v = a * v + b;
  return out;
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > img.width() || y0 + h > img.height()) {
    throw ExtractionError("crop window outside image");
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto src = img.row(y0 + y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace fpm

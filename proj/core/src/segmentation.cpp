#include "fpm/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace fpm {

Segmentation segment_foreground(const Image& img, Polarity polarity, const KMeansOptions& opts) {
  const auto px = img.data();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  double dark = *lo_it;
  double bright = *hi_it;
  if (!(bright > dark)) throw SegmentationError("cannot segment a constant image");

  Segmentation seg;
  for (seg.iterations = 1; seg.iterations <= opts.max_iterations; ++seg.iterations) {
    double sum_dark = 0.0;
    double sum_bright = 0.0;
    std::size_t n_dark = 0;
    std::size_t n_bright = 0;
    const double split = 0.5 * (dark + bright);
    for (double v : px) {
      if (v <= split) {
        sum_dark += v;
        ++n_dark;
      } else {
        sum_bright += v;
        ++n_bright;
      }
    }
    // Extremes seed both clusters, so neither can empty out.
    const double next_dark = sum_dark / static_cast<double>(n_dark);
    const double next_bright = sum_bright / static_cast<double>(n_bright);
    const double shift = std::max(std::abs(next_dark - dark), std::abs(next_bright - bright));
    dark = next_dark;
    bright = next_bright;
    if (shift < opts.tolerance) break;
  }
  seg.iterations = std::min(seg.iterations, opts.max_iterations);
  seg.dark_centroid = dark;
  seg.bright_centroid = bright;

  const double split = 0.5 * (dark + bright);
  seg.foreground = Mask(img.width(), img.height());
  auto out = seg.foreground.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const bool is_dark = px[i] <= split;
    out[i] = (polarity == Polarity::DarkRidges) == is_dark ? 1 : 0;
  }
  return seg;
}

BoundingBox mask_bounding_box(const Mask& mask) {
  BoundingBox box{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  if (box.x_max < 0) throw ExtractionError("foreground mask is empty");
  return box;
}

CenterPatch extract_center_patch(const Image& img, const Mask& mask, int size) {
  if (size < 1) throw ParameterError("patch size must be positive");
  if (img.width() < size || img.height() < size) {
    throw ExtractionError("image smaller than the requested patch");
  }
  if (mask.width() != img.width() || mask.height() != img.height()) {
    throw ParameterError("mask and image dimensions differ");
  }
  CenterPatch out;
  out.box = mask_bounding_box(mask);
  const double half = 0.5 * (size - 1);
  const int x0 = static_cast<int>(std::floor(out.box.center_x() - half + 0.5));
  const int y0 = static_cast<int>(std::floor(out.box.center_y() - half + 0.5));
  out.x0 = std::clamp(x0, 0, img.width() - size);
  out.y0 = std::clamp(y0, 0, img.height() - size);
  out.patch = crop(img, out.x0, out.y0, size, size);
  return out;
}

double patch_side_mm(int size_px, double dpi) {
  if (!(dpi > 0.0)) throw ParameterError("dpi must be positive");
  return size_px / dpi * 25.4;
}

}  // namespace fpm

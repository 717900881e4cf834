#pragma once

#include "fpm/image.hpp"

namespace fpm {

/// Which k-means cluster counts as fingerprint foreground.
enum class Polarity { DarkRidges, BrightRidges };

struct Segmentation {
  Mask foreground;
  double dark_centroid = 0.0;
  double bright_centroid = 0.0;
  int iterations = 0;
};

struct KMeansOptions {
  double tolerance = 1e-6;
  int max_iterations = 100;
};

/// Two-cluster k-means on raw intensities, seeded at the minimum and maximum
/// intensity. Throws SegmentationError for a constant image.
Segmentation segment_foreground(const Image& img, Polarity polarity = Polarity::DarkRidges,
                                const KMeansOptions& opts = {});

/// Inclusive axis-aligned bounding box.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  double center_y() const noexcept { return 0.5 * (y_min + y_max); }
};

/// Throws ExtractionError for an empty mask.
BoundingBox mask_bounding_box(const Mask& mask);

struct CenterPatch {
  Image patch;
  int x0 = 0;  ///< window origin in the source image
  int y0 = 0;
  BoundingBox box;
};

/// size x size window centered on the mask's bounding box, shifted as needed
/// to stay inside the image. Throws ExtractionError when the image is smaller
/// than the window or the mask is empty.
CenterPatch extract_center_patch(const Image& img, const Mask& mask, int size = 70);

/// Physical side length of a patch in millimetres at the given resolution.
double patch_side_mm(int size_px, double dpi);

}  // namespace fpm

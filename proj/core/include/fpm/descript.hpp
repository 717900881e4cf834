#pragma once

#include <vector>

#include "fpm/detect.hpp"
#include "fpm/image.hpp"

namespace fpm {

/// (2w+1) x (2w+1) intensity patch sampled in the keypoint frame and
/// normalized to zero mean and unit (population) standard deviation.
struct PatchDescriptor {
  Image values;
  int half_window = 7;
};

/// Concatenated gradient-orientation histograms, unit L2 norm.
struct HistDescriptor {
  std::vector<double> values;
};

struct HistogramConfig {
  /// Window side in pixels for a keypoint at `reference_scale`; the window
  /// grows linearly with the keypoint scale.
  double window = 16.0;
  double reference_scale = 1.6;
  int grid_cells = 4;
  int orientation_bins = 8;
  double clamp = 0.2;

  void validate() const;
};

/// Patch stddev below this makes a descriptor degenerate.
inline constexpr double kMinPatchStddev = 1e-6;

/// Throws ExtractionError when the rotated footprint leaves the image and
/// DegenerateInputError for a flat patch.
PatchDescriptor oriented_patch_descriptor(const Image& img, const Keypoint& kp, int half_window = 7);

/// Sum of squared elementwise differences.
double ssd_distance(const PatchDescriptor& a, const PatchDescriptor& b);

/// Throws ExtractionError when the footprint leaves the image and
/// DegenerateInputError when the window has no gradient.
HistDescriptor gradient_histogram_descriptor(const Image& img, const Keypoint& kp,
                                             const HistogramConfig& cfg = {});

double euclidean_distance(const HistDescriptor& a, const HistDescriptor& b);

}  // namespace fpm

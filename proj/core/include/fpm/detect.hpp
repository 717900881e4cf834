#pragma once

#include <vector>

#include "fpm/image.hpp"

namespace fpm {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  ///< radians in (-pi, pi]
  double scale = 1.0;  ///< pixels; 1 for Harris keypoints
  double strength = 0.0;
};

struct HarrisConfig {
  double sigma_h = 1.0;       ///< derivative smoothing
  double sigma_theta = 4.0;   ///< orientation smoothing
  double sigma_window = 2.0;  ///< structure-tensor averaging
  double response_threshold_rel = 0.01;
  double nms_radius = 3.0;
  int max_keypoints = 200;
  int border_margin = 7;

  void validate() const;
};

struct DogConfig {
  int octaves = 3;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double contrast_threshold = 0.03;
  double edge_ratio_threshold = 10.0;
  int max_keypoints = 200;
  /// Start the pyramid from a 2x bilinear upsampling of the input.
  bool upsample = true;

  void validate() const;
};

struct Orientation {
  double theta = 0.0;
  bool degenerate = false;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

/// Smaller eigenvalue of the Gaussian-averaged gradient outer product.
Image harris_response(const Image& img, const HarrisConfig& cfg = {});

/// Thresholded, non-max-suppressed Harris corners, strongest first
/// (ties by y then x), each carrying an orientation at sigma_theta.
std::vector<Keypoint> harris_keypoints(const Image& img, const HarrisConfig& cfg = {});

/// atan2 of the sigma_theta-smoothed gradient sampled bilinearly at (x, y).
Orientation keypoint_orientation(const Image& img, double x, double y, double sigma_theta);
/// Same, from a gradient field computed once for many keypoints.
Orientation keypoint_orientation(const GradientField& g, double x, double y);

/// Difference-of-Gaussians extrema with contrast and edge rejection,
/// quadratic sub-pixel refinement and a dominant orientation. Strongest
/// |DoG| first.
std::vector<Keypoint> dog_keypoints(const Image& img, const DogConfig& cfg = {});

}  // namespace fpm

#pragma once

#include <cstdint>
#include <vector>

#include "fpm/image.hpp"
#include "fpm/protocol.hpp"

namespace fpm {

struct Minutia {
  double x = 0.0;
  double y = 0.0;
};

struct PhaseWarp {
  double kx = 0.0;
  double ky = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Procedural ridge pattern in finger coordinates (origin at the finger
/// center). Ridges are dark, valleys bright.
class SyntheticFinger {
 public:
  /// ridge_period >= 4 pixels; minutiae are planted within `extent` / 2 of
  /// the origin.
  SyntheticFinger(std::uint64_t seed, double ridge_period, int n_minutiae, double extent = 64.0);

  double intensity(double x, double y) const noexcept;
  double period() const noexcept { return period_; }
  const std::vector<Minutia>& minutiae() const noexcept { return minutiae_; }

 private:
  double phase(double x, double y) const noexcept;
  /// Sum of Gaussian bumps scattered on a jittered lattice keyed by the seed.
  double scatter(double x, double y, std::uint64_t salt, double cell, unsigned density, double radius) const noexcept;

  std::uint64_t seed_;
  double period_;
  double cx_ = 0.0;  ///< far center of the base circular ridge flow
  double cy_ = 0.0;
  std::vector<PhaseWarp> warps_;
  std::vector<PhaseWarp> wobble_;
  PhaseWarp contrast_;
  std::vector<Minutia> minutiae_;
  std::vector<double> windings_;
};

struct SyntheticPrint {
  Image image;
  std::vector<Minutia> minutiae;  ///< pixel coordinates in `image`
};

/// size x size rendering of one finger centered in the frame, with mild
/// additive noise. size >= 32, ridge_period >= 4.
SyntheticPrint generate_synthetic_finger(std::uint64_t seed, int size, double ridge_period, int n_minutiae);

struct AcquisitionOptions {
  int width = 152;
  int height = 200;
  double noise = 0.04;             ///< additive Gaussian sigma
  double max_rotation_deg = 20.0;
  double max_translation = 10.0;   ///< pixels
  double contrast_jitter = 0.15;   ///< gain drawn from 1 +- jitter
  double offset_jitter = 0.05;
  bool contact_area = true;        ///< elliptical contact region on a bright background
  double center_jitter = 3.0;      ///< contact-area center, pixels
};

struct Acquisition {
  Image image;
  double theta = 0.0;  ///< finger-to-sensor rotation
  double tx = 0.0;
  double ty = 0.0;
  std::vector<Minutia> minutiae;  ///< planted minutiae in image coordinates
};

/// One impression: a random rigid pose (|theta| <= max, |t| <= max), fresh
/// noise and an intensity gain/offset. Sensor pixel p sees the finger at
/// R(theta) (p - center) + t.
Acquisition acquire(const SyntheticFinger& finger, const AcquisitionOptions& opts, std::uint64_t seed);

struct SyntheticDatasetConfig {
  int persons = 10;
  int fingers_per_person = 1;
  int acquisitions = 8;
  double ridge_period = 6.5;
  double period_jitter = 0.15;  ///< per-finger period scaled by 1 +- jitter
  int minutiae = 6;
  std::uint64_t seed = 1;
  AcquisitionOptions acquisition;
};

/// Full-size acquisitions labeled "sNNN/fN/aN".
PatchSet generate_synthetic_dataset(const SyntheticDatasetConfig& cfg);

}  // namespace fpm

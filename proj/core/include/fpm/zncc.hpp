#pragma once

#include <memory>
#include <vector>

#include "fpm/image.hpp"

namespace fpm {

/// Zero-mean normalized cross-correlation gamma(u, v) for every integer
/// offset of the candidate relative to the reference. The candidate pixel
/// C(x - u, y - v) is paired with E(x, y).
struct CorrelationSurface {
  int u_min = 0;  ///< -(candidate width - 1)
  int v_min = 0;  ///< -(candidate height - 1)
  int u_count = 0;
  int v_count = 0;
  std::vector<double> values;          ///< row-major over (v, u)
  std::vector<std::size_t> overlap;    ///< Card(S) per offset
  std::vector<std::uint8_t> valid;

  int u_max() const noexcept { return u_min + u_count - 1; }
  int v_max() const noexcept { return v_min + v_count - 1; }

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v - v_min) * static_cast<std::size_t>(u_count) +
           static_cast<std::size_t>(u - u_min);
  }
  double at(int u, int v) const noexcept { return values[index(u, v)]; }
  bool is_valid(int u, int v) const noexcept { return valid[index(u, v)] != 0; }
  std::size_t valid_count() const noexcept;
};

struct SurfacePeak {
  double value = 0.0;
  int u = 0;
  int v = 0;
};

struct ZnccConfig {
  double rotation_min_deg = -30.0;
  double rotation_max_deg = 30.0;
  double rotation_step_deg = 5.0;
  double min_overlap_fraction = 0.25;

  /// Throws ParameterError on an invalid sweep or overlap fraction.
  void validate() const;
  /// Sweep angles in degrees, rotation_min up to rotation_max inclusive.
  std::vector<double> angles_deg() const;
};

struct ZnccResult {
  double score = 0.0;
  bool degenerate = false;
  double best_angle_deg = 0.0;
  int best_u = 0;
  int best_v = 0;
};

/// Per-pixel variance at or below this is treated as zero (sigma = 0).
inline constexpr double kZnccMinVariance = 1e-10;

/// Direct summation over every offset; the reference implementation.
/// Throws DegenerateInputError when no offset is valid.
CorrelationSurface correlation_surface_direct(const Image& e, const MaskedImage& c,
                                              double min_overlap_fraction);
CorrelationSurface correlation_surface_direct(const Image& e, const Image& c,
                                              double min_overlap_fraction);

/// FFT-accelerated equivalent of correlation_surface_direct.
CorrelationSurface correlation_surface(const Image& e, const MaskedImage& c,
                                       double min_overlap_fraction);
CorrelationSurface correlation_surface(const Image& e, const Image& c,
                                       double min_overlap_fraction);

/// Maximum over valid entries, ties resolved to the first in (v, u) order.
SurfacePeak surface_peak(const CorrelationSurface& s);

class ZnccCandidate;

/// Reference-side spectra, reusable against many candidates.
class ZnccReference {
 public:
  ZnccReference(const Image& e, int pad_width, int pad_height);
  ~ZnccReference();
  ZnccReference(ZnccReference&&) noexcept;
  ZnccReference& operator=(ZnccReference&&) noexcept;

  const Image& image() const noexcept;
  int pad_width() const noexcept;
  int pad_height() const noexcept;

 private:
  friend CorrelationSurface correlation_surface(const ZnccReference&, const ZnccCandidate&,
                                                std::size_t, double);
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Candidate-side spectra for every angle of the rotation sweep.
class ZnccCandidate {
 public:
  ZnccCandidate(const Image& c, const ZnccConfig& cfg, int pad_width, int pad_height);
  /// A single, already masked candidate treated as the 0-degree sweep entry.
  ZnccCandidate(const MaskedImage& c, int pad_width, int pad_height);
  ~ZnccCandidate();
  ZnccCandidate(ZnccCandidate&&) noexcept;
  ZnccCandidate& operator=(ZnccCandidate&&) noexcept;

  std::size_t angle_count() const noexcept;
  double angle_deg(std::size_t i) const;

 private:
  friend CorrelationSurface correlation_surface(const ZnccReference&, const ZnccCandidate&,
                                                std::size_t, double);
  struct Impl;
  std::unique_ptr<Impl> impl_;

  void add_angle(const MaskedImage& rotated, double degrees);
};

/// Surface for sweep angle `angle_index` using precomputed spectra.
CorrelationSurface correlation_surface(const ZnccReference& e, const ZnccCandidate& c,
                                       std::size_t angle_index, double min_overlap_fraction);

/// FFT size large enough for linear correlation of the two extents.
int zncc_pad_extent(int a, int b);

/// s_cor: the candidate is rotated through the sweep, each surface is
/// maximized over valid offsets, and the best angle wins. A candidate with no
/// valid offset at any angle scores 0 with `degenerate` set.
ZnccResult zncc_score(const Image& e, const Image& c, const ZnccConfig& cfg = {});
ZnccResult zncc_score(const ZnccReference& e, const ZnccCandidate& c, const ZnccConfig& cfg);

}  // namespace fpm

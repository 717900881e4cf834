#include "fpm/descript.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace fpm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAssumedInputBlur = 0.5;

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Fixed point of repeated clamp-and-renormalize: the largest entries sit at
// `limit`, the rest are rescaled so the norm is 1 again. Unit-norm input.
void clamp_unit_vector(std::vector<double>& v, double limit) {
  if (limit * limit * static_cast<double>(v.size()) <= 1.0) {
    for (double& x : v) x = 1.0 / std::sqrt(static_cast<double>(v.size()));
    return;
  }
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double tail = 0.0;
  for (double x : sorted) tail += x * x;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double budget = 1.0 - limit * limit * static_cast<double>(k);
    const double scale = tail > 0.0 ? std::sqrt(budget / tail) : 0.0;
    if (sorted[k] * scale <= limit) {
      for (double& x : v) x = std::min(x * scale, limit);
      return;
    }
    tail -= sorted[k] * sorted[k];
  }
}

}  // namespace

void HistogramConfig::validate() const {
  if (!(window > 0.0 && reference_scale > 0.0)) {
    throw ParameterError("histogram window and reference scale must be positive");
  }
  if (grid_cells < 1 || orientation_bins < 1) throw ParameterError("histogram grid must be non-empty");
  if (!(clamp > 0.0)) throw ParameterError("histogram clamp must be positive");
}

PatchDescriptor oriented_patch_descriptor(const Image& img, const Keypoint& kp, int half_window) {
  if (half_window < 1) throw ParameterError("half_window must be >= 1");
  const double c = std::cos(kp.theta);
  const double s = std::sin(kp.theta);
  const double w = half_window;
  for (double i : {-w, w}) {
    for (double j : {-w, w}) {
      const double x = kp.x + c * i - s * j;
      const double y = kp.y + s * i + c * j;
      if (x < 0.0 || y < 0.0 || x > img.width() - 1.0 || y > img.height() - 1.0) {
        throw ExtractionError("oriented patch footprint leaves the image");
      }
    }
  }

  const int side = 2 * half_window + 1;
  PatchDescriptor d{Image(side, side), half_window};
  double sum = 0.0;
  for (int j = -half_window; j <= half_window; ++j) {
    for (int i = -half_window; i <= half_window; ++i) {
      // Patch x-axis follows the keypoint orientation.
      const double v = sample_bilinear(img, kp.x + c * i - s * j, kp.y + s * i + c * j);
      d.values(i + half_window, j + half_window) = v;
      sum += v;
    }
  }
  const double n = static_cast<double>(d.values.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double& v : d.values.data()) {
    v -= mean;
    ss += v * v;
  }
  const double stddev = std::sqrt(ss / n);
  if (stddev < kMinPatchStddev) throw DegenerateInputError("flat patch has no descriptor");
  for (double& v : d.values.data()) v /= stddev;
  return d;
}

double ssd_distance(const PatchDescriptor& a, const PatchDescriptor& b) {
  if (a.values.width() != b.values.width() || a.values.height() != b.values.height()) {
    throw ParameterError("patch descriptors differ in size");
  }
  const auto pa = a.values.data();
  const auto pb = b.values.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  return acc;
}

HistDescriptor gradient_histogram_descriptor(const Image& img, const Keypoint& kp,
                                             const HistogramConfig& cfg) {
  cfg.validate();
  if (!(kp.scale > 0.0)) throw ParameterError("keypoint scale must be positive");
  const double window = cfg.window * kp.scale / cfg.reference_scale;
  const double half = 0.5 * window;
  const double c = std::cos(kp.theta);
  const double s = std::sin(kp.theta);
  // Axis-aligned extent of the rotated square.
  const double reach = half * (std::abs(c) + std::abs(s));
  // One extra pixel for the central differences at the footprint edge.
  if (kp.x - reach < 1.0 || kp.y - reach < 1.0 || kp.x + reach > img.width() - 2.0 ||
      kp.y + reach > img.height() - 2.0) {
    throw ExtractionError("histogram footprint leaves the image");
  }

  // Smooth only a local crop; the margin keeps the truncated kernel exact.
  const double sigma = std::sqrt(std::max(0.0, kp.scale * kp.scale - kAssumedInputBlur * kAssumedInputBlur));
  const int margin = static_cast<int>(std::ceil(3.0 * sigma)) + 2;
  const int x0 = std::max(0, static_cast<int>(std::floor(kp.x - reach)) - margin);
  const int y0 = std::max(0, static_cast<int>(std::floor(kp.y - reach)) - margin);
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(kp.x + reach)) + margin);
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(kp.y + reach)) + margin);
  const auto smooth = gaussian_smooth(crop(img, x0, y0, x1 - x0 + 1, y1 - y0 + 1), sigma);

  const int cells = cfg.grid_cells;
  const int bins = cfg.orientation_bins;
  const double cell_width = window / cells;
  const double weight_inv = 1.0 / (2.0 * half * half);  // Gaussian sigma = window / 2
  std::vector<double> hist(static_cast<std::size_t>(cells * cells * bins), 0.0);

  const int px0 = static_cast<int>(std::ceil(kp.x - reach));
  const int px1 = static_cast<int>(std::floor(kp.x + reach));
  const int py0 = static_cast<int>(std::ceil(kp.y - reach));
  const int py1 = static_cast<int>(std::floor(kp.y + reach));
  for (int py = py0; py <= py1; ++py) {
    for (int px = px0; px <= px1; ++px) {
      const double dx = px - kp.x;
      const double dy = py - kp.y;
      // Offset expressed in the keypoint frame, R(-theta) d.
      const double rx = c * dx + s * dy;
      const double ry = -s * dx + c * dy;
      if (std::abs(rx) >= half || std::abs(ry) >= half) continue;

      const int lx = px - x0;
      const int ly = py - y0;
      const double gx = 0.5 * (smooth(lx + 1, ly) - smooth(lx - 1, ly));
      const double gy = 0.5 * (smooth(lx, ly + 1) - smooth(lx, ly - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx) - kp.theta;
      ang = std::fmod(ang, 2.0 * kPi);
      if (ang < 0.0) ang += 2.0 * kPi;

      const double weight = mag * std::exp(-(rx * rx + ry * ry) * weight_inv);
      const double cx = (rx + half) / cell_width - 0.5;
      const double cy = (ry + half) / cell_width - 0.5;
      const double co = ang / (2.0 * kPi) * bins;
      const int ix = static_cast<int>(std::floor(cx));
      const int iy = static_cast<int>(std::floor(cy));
      const int io = static_cast<int>(std::floor(co));
      const double fx = cx - ix;
      const double fy = cy - iy;
      const double fo = co - io;

      for (int a = 0; a <= 1; ++a) {
        const int bx = ix + a;
        if (bx < 0 || bx >= cells) continue;
        const double wx = a ? fx : 1.0 - fx;
        for (int b = 0; b <= 1; ++b) {
          const int by = iy + b;
          if (by < 0 || by >= cells) continue;
          const double wy = b ? fy : 1.0 - fy;
          for (int k = 0; k <= 1; ++k) {
            const int bo = ((io + k) % bins + bins) % bins;
            const double wo = k ? fo : 1.0 - fo;
            hist[static_cast<std::size_t>((by * cells + bx) * bins + bo)] += weight * wx * wy * wo;
          }
        }
      }
    }
  }

  const double norm = l2_norm(hist);
  if (norm < 1e-12) throw DegenerateInputError("histogram window has no gradient");
  for (double& v : hist) v /= norm;
  clamp_unit_vector(hist, cfg.clamp);
  return HistDescriptor{std::move(hist)};
}

double euclidean_distance(const HistDescriptor& a, const HistDescriptor& b) {
  if (a.values.size() != b.values.size()) throw ParameterError("histogram descriptors differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace fpm

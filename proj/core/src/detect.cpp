#include "fpm/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fpm {

namespace {

constexpr double kPi = std::numbers::pi;

// Input images are assumed to carry this much blur already.
constexpr double kAssumedInputBlur = 0.5;
// Extrema closer than this to an octave border are not refined.
constexpr int kDogBorder = 2;
constexpr int kOrientationBins = 36;

bool stronger(const Keypoint& a, const Keypoint& b) {
  if (a.strength != b.strength) return a.strength > b.strength;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

Image downsample_by_two(const Image& img) {
  const int w = std::max(1, img.width() / 2);
  const int h = std::max(1, img.height() / 2);
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = img(2 * x, 2 * y);
  }
  return out;
}

// (2w-1) x (2h-1) so that output pixel 2x lands exactly on input pixel x.
Image upsample_by_two(const Image& img) {
  const int w = 2 * img.width() - 1;
  const int h = 2 * img.height() - 1;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = y / 2;
    const int y1 = (y + 1) / 2;
    for (int x = 0; x < w; ++x) {
      const int x0 = x / 2;
      const int x1 = (x + 1) / 2;
      out(x, y) = 0.25 * (img(x0, y0) + img(x1, y0) + img(x0, y1) + img(x1, y1));
    }
  }
  return out;
}

Image subtract(const Image& a, const Image& b) {
  Image out(a.width(), a.height());
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

struct Octave {
  std::vector<Image> gauss;  // scales_per_octave + 3 levels
  std::vector<Image> dog;    // scales_per_octave + 2 levels
};

std::vector<Octave> build_scale_space(const Image& img, const DogConfig& cfg) {
  const int s_count = cfg.scales_per_octave;
  const double input_blur = cfg.upsample ? 2.0 * kAssumedInputBlur : kAssumedInputBlur;
  const double k = std::pow(2.0, 1.0 / s_count);

  // Incremental blur between consecutive levels, in octave-local pixels.
  std::vector<double> increments(static_cast<std::size_t>(s_count + 3), 0.0);
  increments[0] = std::sqrt(std::max(0.0, cfg.base_sigma * cfg.base_sigma - input_blur * input_blur));
  for (int s = 1; s < s_count + 3; ++s) {
    const double prev = cfg.base_sigma * std::pow(k, s - 1);
    const double cur = prev * k;
    increments[static_cast<std::size_t>(s)] = std::sqrt(cur * cur - prev * prev);
  }

  std::vector<Octave> octaves;
  Image base = gaussian_smooth(cfg.upsample ? upsample_by_two(img) : img, increments[0]);
  for (int o = 0; o < cfg.octaves; ++o) {
    if (std::min(base.width(), base.height()) < 2 * kDogBorder + 3) break;
    Octave oct;
    oct.gauss.push_back(base);
    for (int s = 1; s < s_count + 3; ++s) {
      oct.gauss.push_back(gaussian_smooth(oct.gauss.back(), increments[static_cast<std::size_t>(s)]));
    }
    for (int s = 0; s + 1 < static_cast<int>(oct.gauss.size()); ++s) {
      oct.dog.push_back(subtract(oct.gauss[static_cast<std::size_t>(s + 1)],
                                 oct.gauss[static_cast<std::size_t>(s)]));
    }
    base = downsample_by_two(oct.gauss[static_cast<std::size_t>(s_count)]);
    octaves.push_back(std::move(oct));
  }
  return octaves;
}

bool is_extremum(const std::vector<Image>& dog, int s, int x, int y) {
  const double v = dog[static_cast<std::size_t>(s)](x, y);
  const bool is_max = v > 0.0;
  for (int ds = -1; ds <= 1; ++ds) {
    const auto& d = dog[static_cast<std::size_t>(s + ds)];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (ds == 0 && dx == 0 && dy == 0) continue;
        const double n = d(x + dx, y + dy);
        if (is_max ? n >= v : n <= v) return false;
      }
    }
  }
  return true;
}

// Solves the 3x3 system H o = -g by Cramer's rule; false when singular.
bool solve3(const std::array<std::array<double, 3>, 3>& h, const std::array<double, 3>& g,
            std::array<double, 3>& o) {
  const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                     h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                     h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
  if (std::abs(det) < 1e-15) return false;
  for (int c = 0; c < 3; ++c) {
    auto m = h;
    for (int r = 0; r < 3; ++r) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = -g[static_cast<std::size_t>(r)];
    const double dc = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                      m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                      m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    o[static_cast<std::size_t>(c)] = dc / det;
  }
  return true;
}

// Dominant gradient direction around (x, y) on a Gaussian level, octave-local
// coordinates and sigma.
double dominant_orientation(const Image& level, double x, double y, double sigma) {
  const double weight_sigma = 1.5 * sigma;
  const int radius = static_cast<int>(std::lround(3.0 * weight_sigma));
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  std::array<double, kOrientationBins> hist{};
  const double inv = 1.0 / (2.0 * weight_sigma * weight_sigma);

  for (int dy = -radius; dy <= radius; ++dy) {
    const int py = cy + dy;
    if (py <= 0 || py >= level.height() - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = cx + dx;
      if (px <= 0 || px >= level.width() - 1) continue;
      if (dx * dx + dy * dy > radius * radius) continue;
      const double gx = 0.5 * (level(px + 1, py) - level(px - 1, py));
      const double gy = 0.5 * (level(px, py + 1) - level(px, py - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const double ang = std::atan2(gy, gx);  // [-pi, pi]
      int bin = static_cast<int>(std::floor((ang + kPi) / (2.0 * kPi) * kOrientationBins));
      bin = (bin % kOrientationBins + kOrientationBins) % kOrientationBins;
      hist[static_cast<std::size_t>(bin)] += mag * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }

  // Two passes of a circular [1 1 1]/3 box filter.
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kOrientationBins> tmp{};
    for (int i = 0; i < kOrientationBins; ++i) {
      const auto prev = static_cast<std::size_t>((i + kOrientationBins - 1) % kOrientationBins);
      const auto next = static_cast<std::size_t>((i + 1) % kOrientationBins);
      tmp[static_cast<std::size_t>(i)] = (hist[prev] + hist[static_cast<std::size_t>(i)] + hist[next]) / 3.0;
    }
    hist = tmp;
  }

  const auto peak = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  if (hist[static_cast<std::size_t>(peak)] <= 0.0) return 0.0;
  const double l = hist[static_cast<std::size_t>((peak + kOrientationBins - 1) % kOrientationBins)];
  const double c = hist[static_cast<std::size_t>(peak)];
  const double r = hist[static_cast<std::size_t>((peak + 1) % kOrientationBins)];
  const double denom = l - 2.0 * c + r;
  const double offset = denom != 0.0 ? std::clamp(0.5 * (l - r) / denom, -0.5, 0.5) : 0.0;
  const double bin_center = peak + 0.5 + offset;
  return wrap_angle(bin_center / kOrientationBins * 2.0 * kPi - kPi);
}

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

void HarrisConfig::validate() const {
  if (!(sigma_h > 0.0 && sigma_theta > 0.0 && sigma_window > 0.0)) {
    throw ParameterError("Harris sigmas must be positive");
  }
  if (!(response_threshold_rel > 0.0 && response_threshold_rel < 1.0)) {
    throw ParameterError("response_threshold_rel must lie in (0, 1)");
  }
  if (nms_radius < 0.0 || max_keypoints < 0 || border_margin < 0) {
    throw ParameterError("Harris radius, cap and margin must be non-negative");
  }
}

void DogConfig::validate() const {
  if (octaves < 1) throw ParameterError("octaves must be >= 1");
  if (scales_per_octave < 2) throw ParameterError("scales_per_octave must be >= 2");
  if (!(base_sigma > 0.0)) throw ParameterError("base_sigma must be positive");
  if (!(contrast_threshold >= 0.0)) throw ParameterError("contrast_threshold must be >= 0");
  if (!(edge_ratio_threshold > 1.0)) throw ParameterError("edge_ratio_threshold must be > 1");
  if (max_keypoints < 0) throw ParameterError("max_keypoints must be >= 0");
}

Image harris_response(const Image& img, const HarrisConfig& cfg) {
  cfg.validate();
  if (img.width() < 3 || img.height() < 3) {
    throw ParameterError("Harris response requires at least 3x3 pixels");
  }
  const auto g = gradient(img, cfg.sigma_h);
  const int w = img.width();
  const int h = img.height();
  Image xx(w, h);
  Image yy(w, h);
  Image xy(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double gx = g.gx.data()[i];
    const double gy = g.gy.data()[i];
    xx.data()[i] = gx * gx;
    yy.data()[i] = gy * gy;
    xy.data()[i] = gx * gy;
  }
  xx = gaussian_smooth(xx, cfg.sigma_window);
  yy = gaussian_smooth(yy, cfg.sigma_window);
  xy = gaussian_smooth(xy, cfg.sigma_window);

  Image out(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double a = xx.data()[i];
    const double c = yy.data()[i];
    const double b = xy.data()[i];
    const double half_diff = 0.5 * (a - c);
    out.data()[i] = 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b);
  }
  return out;
}

Orientation keypoint_orientation(const GradientField& g, double x, double y) {
  const double gx = sample_bilinear(g.gx, x, y);
  const double gy = sample_bilinear(g.gy, x, y);
  if (gx == 0.0 && gy == 0.0) return {0.0, true};
  return {wrap_angle(std::atan2(gy, gx)), false};
}

Orientation keypoint_orientation(const Image& img, double x, double y, double sigma_theta) {
  return keypoint_orientation(gradient(img, sigma_theta), x, y);
}

std::vector<Keypoint> harris_keypoints(const Image& img, const HarrisConfig& cfg) {
  const auto response = harris_response(img, cfg);
  const int w = img.width();
  const int h = img.height();
  const double peak = *std::max_element(response.data().begin(), response.data().end());
  if (!(peak > 0.0)) return {};
  const double threshold = cfg.response_threshold_rel * peak;

  std::vector<Keypoint> candidates;
  const int m = cfg.border_margin;
  for (int y = std::max(1, m); y < std::min(h - 1, h - m); ++y) {
    for (int x = std::max(1, m); x < std::min(w - 1, w - m); ++x) {
      const double v = response(x, y);
      if (v < threshold) continue;
      bool local_max = true;
      for (int dy = -1; dy <= 1 && local_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (response(x + dx, y + dy) > v) {
            local_max = false;
            break;
          }
        }
      }
      if (local_max) candidates.push_back({static_cast<double>(x), static_cast<double>(y), 0.0, 1.0, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), stronger);

  std::vector<Keypoint> kept;
  const double r2 = cfg.nms_radius * cfg.nms_radius;
  for (const auto& c : candidates) {
    if (static_cast<int>(kept.size()) >= cfg.max_keypoints) break;
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Keypoint& k) {
      const double dx = k.x - c.x;
      const double dy = k.y - c.y;
      return dx * dx + dy * dy < r2;
    });
    if (clear) kept.push_back(c);
  }

  if (!kept.empty()) {
    const auto g = gradient(img, cfg.sigma_theta);
    for (auto& k : kept) k.theta = keypoint_orientation(g, k.x, k.y).theta;
  }
  return kept;
}

std::vector<Keypoint> dog_keypoints(const Image& img, const DogConfig& cfg) {
  cfg.validate();
  if (img.width() < 16 || img.height() < 16) {
    throw ParameterError("DoG detection requires at least 16x16 pixels");
  }
  const auto octaves = build_scale_space(img, cfg);
  const int s_count = cfg.scales_per_octave;
  const double prefilter = 0.5 * cfg.contrast_threshold;
  const double r = cfg.edge_ratio_threshold;
  const double edge_limit = (r + 1.0) * (r + 1.0) / r;

  std::vector<Keypoint> out;
  for (std::size_t o = 0; o < octaves.size(); ++o) {
    const auto& dog = octaves[o].dog;
    // Octave-local pixels to input pixels.
    const double factor = std::ldexp(1.0, static_cast<int>(o) - (cfg.upsample ? 1 : 0));
    const int w = dog[0].width();
    const int h = dog[0].height();
    for (int s = 1; s <= s_count; ++s) {
      const auto& d0 = dog[static_cast<std::size_t>(s - 1)];
      const auto& d1 = dog[static_cast<std::size_t>(s)];
      const auto& d2 = dog[static_cast<std::size_t>(s + 1)];
      for (int y = kDogBorder; y < h - kDogBorder; ++y) {
        for (int x = kDogBorder; x < w - kDogBorder; ++x) {
          const double v = d1(x, y);
          if (std::abs(v) <= prefilter) continue;
          if (!is_extremum(dog, s, x, y)) continue;

          const double dxx = d1(x + 1, y) + d1(x - 1, y) - 2.0 * v;
          const double dyy = d1(x, y + 1) + d1(x, y - 1) - 2.0 * v;
          const double dxy = 0.25 * (d1(x + 1, y + 1) - d1(x - 1, y + 1) - d1(x + 1, y - 1) + d1(x - 1, y - 1));
          const double trace = dxx + dyy;
          const double det = dxx * dyy - dxy * dxy;
          if (det <= 0.0 || trace * trace / det > edge_limit) continue;

          const std::array<double, 3> grad = {0.5 * (d1(x + 1, y) - d1(x - 1, y)),
                                              0.5 * (d1(x, y + 1) - d1(x, y - 1)),
                                              0.5 * (d2(x, y) - d0(x, y))};
          const double dss = d2(x, y) + d0(x, y) - 2.0 * v;
          const double dxs = 0.25 * (d2(x + 1, y) - d2(x - 1, y) - d0(x + 1, y) + d0(x - 1, y));
          const double dys = 0.25 * (d2(x, y + 1) - d2(x, y - 1) - d0(x, y + 1) + d0(x, y - 1));
          const std::array<std::array<double, 3>, 3> hess = {
              {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}}};
          std::array<double, 3> off{};
          if (!solve3(hess, grad, off)) off = {0.0, 0.0, 0.0};
          for (double& c : off) c = std::clamp(c, -0.5, 0.5);

          const double refined = v + 0.5 * (grad[0] * off[0] + grad[1] * off[1] + grad[2] * off[2]);
          if (std::abs(refined) < cfg.contrast_threshold) continue;

          const double local_sigma = cfg.base_sigma * std::pow(2.0, (s + off[2]) / s_count);
          Keypoint kp;
          kp.x = std::clamp((x + off[0]) * factor, 0.0, img.width() - 1.0);
          kp.y = std::clamp((y + off[1]) * factor, 0.0, img.height() - 1.0);
          kp.scale = local_sigma * factor;
          kp.strength = std::abs(refined);
          kp.theta = dominant_orientation(octaves[o].gauss[static_cast<std::size_t>(s)], x + off[0],
                                          y + off[1], local_sigma);
          out.push_back(kp);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), stronger);
  if (static_cast<int>(out.size()) > cfg.max_keypoints) out.resize(static_cast<std::size_t>(cfg.max_keypoints));
  return out;
}

}  // namespace fpm

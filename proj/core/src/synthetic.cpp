#include "fpm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fpm/random.hpp"

namespace fpm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPoreCell = 5.0;
constexpr double kBackground = 0.95;
constexpr double kRidgeAmplitude = 0.38;
constexpr std::uint64_t kPoreSalt = 0x5bd1e995ULL;
constexpr std::uint64_t kGapSalt = 0x27d4eb2f165667c5ULL;
constexpr std::uint64_t kDotSalt = 0x165667b19e3779f9ULL;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

PhaseWarp random_warp(CounterRng& rng, double min_wavelength, double max_wavelength, double amplitude) {
  const double dir = rng.uniform(0.0, kTwoPi);
  const double k = kTwoPi / rng.uniform(min_wavelength, max_wavelength);
  return {k * std::cos(dir), k * std::sin(dir), amplitude, rng.uniform(0.0, kTwoPi)};
}

}  // namespace

SyntheticFinger::SyntheticFinger(std::uint64_t seed, double ridge_period, int n_minutiae, double extent)
    : seed_(seed), period_(ridge_period) {
  if (!(ridge_period >= 4.0) || !std::isfinite(ridge_period)) throw ParameterError("ridge period must be >= 4");
  if (n_minutiae < 0) throw ParameterError("minutiae count must be >= 0");
  if (!(extent > 0.0)) throw ParameterError("minutiae extent must be positive");

  CounterRng rng(seed, 0);
  const double dir = rng.uniform(0.0, kTwoPi);
  const double dist = rng.uniform(45.0, 130.0);
  cx_ = dist * std::cos(dir);
  cy_ = dist * std::sin(dir);
  for (int i = 0; i < 3; ++i) warps_.push_back(random_warp(rng, 60.0, 150.0, rng.uniform(0.6, 1.6)));
  contrast_ = random_warp(rng, 50.0, 110.0, 0.3);
  // Short-wavelength phase noise: ridges wiggle instead of running perfectly smooth.
  for (int i = 0; i < 4; ++i) wobble_.push_back(random_warp(rng, 2.0 * period_, 4.0 * period_, 0.25));

  // Keep minutiae apart so each singularity stays a distinct ridge event.
  const double min_gap = 1.5 * period_;
  const double radius = 0.5 * extent;
  for (int tries = 0; static_cast<int>(minutiae_.size()) < n_minutiae && tries < 10000; ++tries) {
    const double r = radius * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, kTwoPi);
    const Minutia m{r * std::cos(a), r * std::sin(a)};
    const bool clear = std::none_of(minutiae_.begin(), minutiae_.end(), [&](const Minutia& o) {
      return std::hypot(o.x - m.x, o.y - m.y) < min_gap;
    });
    if (!clear) continue;
    minutiae_.push_back(m);
    windings_.push_back(rng.below(2) ? 1.0 : -1.0);
  }
}

double SyntheticFinger::phase(double x, double y) const noexcept {
  double p = kTwoPi / period_ * std::hypot(x - cx_, y - cy_);
  for (const auto& w : warps_) p += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
  for (const auto& w : wobble_) p += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
  for (std::size_t i = 0; i < minutiae_.size(); ++i) {
    p += windings_[i] * std::atan2(y - minutiae_[i].y, x - minutiae_[i].x);
  }
  return p;
}

double SyntheticFinger::scatter(double x, double y, std::uint64_t salt, double cell, unsigned density,
                                double radius) const noexcept {
  const auto ci = static_cast<long long>(std::floor(x / cell));
  const auto cj = static_cast<long long>(std::floor(y / cell));
  const double inv = -0.5 / (radius * radius);
  double acc = 0.0;
  for (long long j = cj - 1; j <= cj + 1; ++j) {
    for (long long i = ci - 1; i <= ci + 1; ++i) {
      const std::uint64_t h = mix64(seed_ ^ salt ^ mix64(static_cast<std::uint64_t>(i) * 0x9e3779b1ULL +
                                                         static_cast<std::uint64_t>(j) * 0x85ebca77c2b2ae63ULL));
      if ((h & 0xff) >= density) continue;
      const double px = (static_cast<double>(i) + static_cast<double>((h >> 8) & 0xffff) / 65536.0) * cell;
      const double py = (static_cast<double>(j) + static_cast<double>((h >> 24) & 0xffff) / 65536.0) * cell;
      acc += std::exp(inv * ((x - px) * (x - px) + (y - py) * (y - py)));
    }
  }
  return acc;
}

double SyntheticFinger::intensity(double x, double y) const noexcept {
  double c = std::cos(phase(x, y));
  // Ridge breaks pull toward the valley level, islands toward the ridge level.
  const double gap = std::min(1.0, scatter(x, y, kGapSalt, 1.6 * period_, 110, 0.3 * period_));
  c += (1.0 - c) * gap;
  const double dot = std::min(1.0, scatter(x, y, kDotSalt, 1.8 * period_, 60, 0.18 * period_));
  c -= (1.0 + c) * dot;
  const double m = 1.0 - contrast_.amplitude * (0.5 + 0.5 * std::sin(contrast_.kx * x + contrast_.ky * y + contrast_.phase));
  double v = 0.5 + kRidgeAmplitude * m * c;
  const double ridge = std::clamp((-c - 0.2) / 0.8, 0.0, 1.0);
  if (ridge > 0.0) v += 0.18 * ridge * scatter(x, y, kPoreSalt, kPoreCell, 90, 0.7);
  return v;
}

SyntheticPrint generate_synthetic_finger(std::uint64_t seed, int size, double ridge_period, int n_minutiae) {
  if (size < 32) throw ParameterError("synthetic finger size must be >= 32");
  const SyntheticFinger finger(seed, ridge_period, n_minutiae, 0.8 * size);
  CounterRng noise(seed, 1);
  const double c = 0.5 * (size - 1);
  SyntheticPrint out;
  out.image = Image(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      out.image(x, y) = clamp01(finger.intensity(x - c, y - c) + 0.02 * noise.normal());
    }
  }
  for (const auto& m : finger.minutiae()) out.minutiae.push_back({m.x + c, m.y + c});
  return out;
}

Acquisition acquire(const SyntheticFinger& finger, const AcquisitionOptions& opts, std::uint64_t seed) {
  if (opts.width < 1 || opts.height < 1) throw ParameterError("acquisition size must be positive");
  if (opts.noise < 0.0 || opts.max_rotation_deg < 0.0 || opts.max_translation < 0.0 ||
      opts.contrast_jitter < 0.0 || opts.contrast_jitter >= 1.0 || opts.offset_jitter < 0.0 ||
      opts.center_jitter < 0.0) {
    throw ParameterError("invalid acquisition options");
  }
  CounterRng rng(seed, 0);
  Acquisition out;
  out.theta = rng.uniform(-opts.max_rotation_deg, opts.max_rotation_deg) * std::numbers::pi / 180.0;
  const double tr = opts.max_translation * std::sqrt(rng.uniform());
  const double ta = rng.uniform(0.0, kTwoPi);
  out.tx = tr * std::cos(ta);
  out.ty = tr * std::sin(ta);
  const double gain = rng.uniform(1.0 - opts.contrast_jitter, 1.0 + opts.contrast_jitter);
  const double offset = rng.uniform(-opts.offset_jitter, opts.offset_jitter);
  const double jr = opts.center_jitter * std::sqrt(rng.uniform());
  const double ja = rng.uniform(0.0, kTwoPi);

  const double cx = 0.5 * (opts.width - 1);
  const double cy = 0.5 * (opts.height - 1);
  const double ex = cx + jr * std::cos(ja);
  const double ey = cy + jr * std::sin(ja);
  const double ax = std::max(1.0, 0.5 * opts.width - 8.0);
  const double ay = std::max(1.0, 0.5 * opts.height - 10.0);
  const double cs = std::cos(out.theta);
  const double sn = std::sin(out.theta);

  CounterRng noise(seed, 1);
  out.image = Image(opts.width, opts.height);
  for (int y = 0; y < opts.height; ++y) {
    for (int x = 0; x < opts.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      double v = finger.intensity(cs * dx - sn * dy + out.tx, sn * dx + cs * dy + out.ty);
      if (opts.contact_area) {
        const double e = std::hypot((x - ex) / ax, (y - ey) / ay);
        const double w = std::clamp((1.0 - e) / 0.05, 0.0, 1.0);
        v = w * v + (1.0 - w) * kBackground;
      }
      v = 0.5 + gain * (v - 0.5) + offset + opts.noise * noise.normal();
      out.image(x, y) = clamp01(v);
    }
  }
  for (const auto& m : finger.minutiae()) {
    const double qx = m.x - out.tx;
    const double qy = m.y - out.ty;
    out.minutiae.push_back({cx + cs * qx + sn * qy, cy - sn * qx + cs * qy});
  }
  return out;
}

PatchSet generate_synthetic_dataset(const SyntheticDatasetConfig& cfg) {
  if (cfg.persons < 1 || cfg.fingers_per_person < 1 || cfg.acquisitions < 1) {
    throw ParameterError("synthetic dataset needs at least one person, finger and acquisition");
  }
  if (cfg.persons > 999 || cfg.fingers_per_person > 9 || cfg.acquisitions > 99) {
    throw ParameterError("synthetic dataset dimensions exceed the label format");
  }
  if (cfg.period_jitter < 0.0 || cfg.period_jitter >= 1.0) throw ParameterError("period jitter must be in [0, 1)");

  PatchSet out;
  char label[32];
  for (int p = 0; p < cfg.persons; ++p) {
    for (int f = 0; f < cfg.fingers_per_person; ++f) {
      const auto k = static_cast<std::uint64_t>(p * cfg.fingers_per_person + f);
      CounterRng rng(cfg.seed, k);
      const std::uint64_t finger_seed = rng();
      const double period = cfg.ridge_period * rng.uniform(1.0 - cfg.period_jitter, 1.0 + cfg.period_jitter);
      const SyntheticFinger finger(finger_seed, period, cfg.minutiae);
      std::snprintf(label, sizeof label, "s%03d/f%d", p, f);
      for (int a = 0; a < cfg.acquisitions; ++a) {
        auto acq = acquire(finger, cfg.acquisition, mix64(finger_seed + static_cast<std::uint64_t>(a) + 1));
        out.push_back({std::string(label) + "/a" + std::to_string(a), label, std::move(acq.image)});
      }
    }
  }
  return out;
}

}  // namespace fpm

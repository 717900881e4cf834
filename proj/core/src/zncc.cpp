#include "fpm/zncc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"

namespace fpm {

namespace {

using detail::RealFft2d;
using detail::Spectrum;

CorrelationSurface empty_surface(int we, int he, int wc, int hc) {
  CorrelationSurface s;
  s.u_min = -(wc - 1);
  s.v_min = -(hc - 1);
  s.u_count = we + wc - 1;
  s.v_count = he + hc - 1;
  const auto n = static_cast<std::size_t>(s.u_count) * static_cast<std::size_t>(s.v_count);
  s.values.assign(n, 0.0);
  s.overlap.assign(n, 0);
  s.valid.assign(n, 0);
  return s;
}

std::size_t min_overlap_count(std::size_t e_pixels, std::size_t c_pixels, double fraction) {
  return static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(std::min(e_pixels, c_pixels)) - 1e-9));
}

void check_fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) throw ParameterError("min_overlap_fraction must lie in (0, 1]");
}

// gamma from running sums; returns false for a zero-variance side.
bool gamma_from_sums(double n, double se, double see, double sc, double scc, double sec,
                     double& gamma) {
  const double var_e = see - se * se / n;
  const double var_c = scc - sc * sc / n;
  if (var_e <= kZnccMinVariance * n || var_c <= kZnccMinVariance * n) return false;
  const double cov = sec - se * sc / n;
  gamma = std::clamp(cov / std::sqrt(var_e * var_c), -1.0, 1.0);
  return true;
}

void finish_surface(CorrelationSurface& s) {
  if (std::none_of(s.valid.begin(), s.valid.end(), [](auto v) { return v != 0; })) {
    throw DegenerateInputError("correlation surface has no valid offset");
  }
}

MaskedImage unmasked(const Image& c) { return MaskedImage{c, Mask(c.width(), c.height(), 1)}; }

// Zero-padded copy of `src` weighted by `mask` (if any) and raised to `power`.
std::vector<double> padded(const Image& src, const Mask* mask, int power, int pw, int ph) {
  std::vector<double> out(static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph), 0.0);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (mask && !(*mask)(x, y)) continue;
      const double v = src(x, y);
      double w = 1.0;
      if (power == 1) w = v;
      if (power == 2) w = v * v;
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)] = w;
    }
  }
  return out;
}

}  // namespace

std::size_t CorrelationSurface::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

void ZnccConfig::validate() const {
  if (!std::isfinite(rotation_min_deg) || !std::isfinite(rotation_max_deg) ||
      rotation_min_deg > rotation_max_deg) {
    throw ParameterError("rotation_min must not exceed rotation_max");
  }
  if (!(rotation_step_deg > 0.0)) throw ParameterError("rotation_step must be positive");
  check_fraction(min_overlap_fraction);
}

std::vector<double> ZnccConfig::angles_deg() const {
  validate();
  std::vector<double> out;
  const auto steps = static_cast<long>(
      std::floor((rotation_max_deg - rotation_min_deg) / rotation_step_deg + 1e-9));
  for (long i = 0; i <= steps; ++i) out.push_back(rotation_min_deg + i * rotation_step_deg);
  return out;
}

CorrelationSurface correlation_surface_direct(const Image& e, const MaskedImage& c,
                                              double min_overlap_fraction) {
  check_fraction(min_overlap_fraction);
  const int we = e.width();
  const int he = e.height();
  const int wc = c.image.width();
  const int hc = c.image.height();
  auto s = empty_surface(we, he, wc, hc);
  const auto need = min_overlap_count(e.size(), c.valid_count(), min_overlap_fraction);

  for (int v = s.v_min; v <= s.v_max(); ++v) {
    const int y0 = std::max(0, v);
    const int y1 = std::min(he, hc + v);
    for (int u = s.u_min; u <= s.u_max(); ++u) {
      const int x0 = std::max(0, u);
      const int x1 = std::min(we, wc + u);
      std::size_t n = 0;
      double sum_e = 0.0;
      double sum_c = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (!c.valid(x - u, y - v)) continue;
          ++n;
          sum_e += e(x, y);
          sum_c += c.image(x - u, y - v);
        }
      }
      const auto idx = s.index(u, v);
      s.overlap[idx] = n;
      if (n == 0 || n < need) continue;
      const double mu_e = sum_e / static_cast<double>(n);
      const double mu_c = sum_c / static_cast<double>(n);
      double num = 0.0;
      double ss_e = 0.0;
      double ss_c = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (!c.valid(x - u, y - v)) continue;
          const double de = e(x, y) - mu_e;
          const double dc = c.image(x - u, y - v) - mu_c;
          num += de * dc;
          ss_e += de * de;
          ss_c += dc * dc;
        }
      }
      const double nn = static_cast<double>(n);
      if (ss_e <= kZnccMinVariance * nn || ss_c <= kZnccMinVariance * nn) continue;
      s.values[idx] = std::clamp(num / (std::sqrt(ss_e) * std::sqrt(ss_c)), -1.0, 1.0);
      s.valid[idx] = 1;
    }
  }
  finish_surface(s);
  return s;
}

CorrelationSurface correlation_surface_direct(const Image& e, const Image& c,
                                              double min_overlap_fraction) {
  return correlation_surface_direct(e, unmasked(c), min_overlap_fraction);
}

SurfacePeak surface_peak(const CorrelationSurface& s) {
  SurfacePeak best;
  bool found = false;
  for (int v = s.v_min; v <= s.v_max(); ++v) {
    for (int u = s.u_min; u <= s.u_max(); ++u) {
      const auto idx = s.index(u, v);
      if (!s.valid[idx]) continue;
      if (!found || s.values[idx] > best.value) {
        best = {s.values[idx], u, v};
        found = true;
      }
    }
  }
  if (!found) throw DegenerateInputError("correlation surface has no valid offset");
  return best;
}

int zncc_pad_extent(int a, int b) { return detail::next_fast_size(a + b - 1); }

// ---------------------------------------------------------------------------
// Spectral path. With 1_E the indicator of E's support and M the candidate
// mask, every sum over S is a cross-correlation of a reference-side plane
// {1_E, E, E^2} with a candidate-side plane {M, C M, C^2 M}.

struct ZnccReference::Impl {
  Image image;
  RealFft2d fft;
  Spectrum ones;
  Spectrum values;
  Spectrum squares;
};

ZnccReference::ZnccReference(const Image& e, int pad_width, int pad_height)
    : impl_(std::make_unique<Impl>(Impl{e, RealFft2d(pad_height, pad_width), {}, {}, {}})) {
  if (pad_width < e.width() || pad_height < e.height()) {
    throw ParameterError("FFT pad smaller than reference image");
  }
  auto& f = impl_->fft;
  f.forward(padded(e, nullptr, 0, pad_width, pad_height), impl_->ones);
  f.forward(padded(e, nullptr, 1, pad_width, pad_height), impl_->values);
  f.forward(padded(e, nullptr, 2, pad_width, pad_height), impl_->squares);
}

ZnccReference::~ZnccReference() = default;
ZnccReference::ZnccReference(ZnccReference&&) noexcept = default;
ZnccReference& ZnccReference::operator=(ZnccReference&&) noexcept = default;

const Image& ZnccReference::image() const noexcept { return impl_->image; }
int ZnccReference::pad_width() const noexcept { return impl_->fft.cols(); }
int ZnccReference::pad_height() const noexcept { return impl_->fft.rows(); }

struct ZnccCandidate::Impl {
  struct Angle {
    double degrees = 0.0;
    std::size_t valid_pixels = 0;
    Spectrum mask;
    Spectrum values;
    Spectrum squares;
  };
  int width = 0;
  int height = 0;
  RealFft2d fft;
  std::vector<Angle> angles;
};

ZnccCandidate::ZnccCandidate(const Image& c, const ZnccConfig& cfg, int pad_width, int pad_height)
    : impl_(std::make_unique<Impl>(Impl{c.width(), c.height(), RealFft2d(pad_height, pad_width), {}})) {
  if (pad_width < c.width() || pad_height < c.height()) {
    throw ParameterError("FFT pad smaller than candidate image");
  }
  for (double deg : cfg.angles_deg()) add_angle(rotate_image(c, deg * std::numbers::pi / 180.0), deg);
}

ZnccCandidate::ZnccCandidate(const MaskedImage& c, int pad_width, int pad_height)
    : impl_(std::make_unique<Impl>(
          Impl{c.image.width(), c.image.height(), RealFft2d(pad_height, pad_width), {}})) {
  if (pad_width < c.image.width() || pad_height < c.image.height()) {
    throw ParameterError("FFT pad smaller than candidate image");
  }
  add_angle(c, 0.0);
}

void ZnccCandidate::add_angle(const MaskedImage& rotated, double degrees) {
  const int pw = impl_->fft.cols();
  const int ph = impl_->fft.rows();
  Impl::Angle a;
  a.degrees = degrees;
  a.valid_pixels = rotated.valid_count();
  impl_->fft.forward(padded(rotated.image, &rotated.valid, 0, pw, ph), a.mask);
  impl_->fft.forward(padded(rotated.image, &rotated.valid, 1, pw, ph), a.values);
  impl_->fft.forward(padded(rotated.image, &rotated.valid, 2, pw, ph), a.squares);
  impl_->angles.push_back(std::move(a));
}

ZnccCandidate::~ZnccCandidate() = default;
ZnccCandidate::ZnccCandidate(ZnccCandidate&&) noexcept = default;
ZnccCandidate& ZnccCandidate::operator=(ZnccCandidate&&) noexcept = default;

std::size_t ZnccCandidate::angle_count() const noexcept { return impl_->angles.size(); }
double ZnccCandidate::angle_deg(std::size_t i) const { return impl_->angles.at(i).degrees; }

CorrelationSurface correlation_surface(const ZnccReference& ref, const ZnccCandidate& cand,
                                       std::size_t angle_index, double min_overlap_fraction) {
  check_fraction(min_overlap_fraction);
  const auto& r = *ref.impl_;
  const auto& c = *cand.impl_;
  const auto& a = c.angles.at(angle_index);
  const int pw = r.fft.cols();
  const int ph = r.fft.rows();
  if (pw != c.fft.cols() || ph != c.fft.rows()) throw ParameterError("FFT pad mismatch");
  const int we = r.image.width();
  const int he = r.image.height();
  if (pw < we + c.width - 1 || ph < he + c.height - 1) {
    throw ParameterError("FFT pad too small for linear correlation");
  }

  // corr(A, B)(d) = sum_x A(x) B(x - d) = IFFT(F(A) conj(F(B)))(d mod P).
  std::vector<double> planes[6];
  const std::pair<const Spectrum*, const Spectrum*> pairs[6] = {
      {&r.ones, &a.mask},   {&r.values, &a.mask},   {&r.squares, &a.mask},
      {&r.ones, &a.values}, {&r.ones, &a.squares}, {&r.values, &a.values},
  };
  Spectrum product(r.fft.spectrum_size());
  for (int k = 0; k < 6; ++k) {
    const auto& lhs = *pairs[k].first;
    const auto& rhs = *pairs[k].second;
    for (std::size_t i = 0; i < product.size(); ++i) product[i] = lhs[i] * std::conj(rhs[i]);
    planes[k].resize(r.fft.real_size());
    r.fft.inverse(product, planes[k]);
  }

  auto s = empty_surface(we, he, c.width, c.height);
  const auto need = min_overlap_count(r.image.size(), a.valid_pixels, min_overlap_fraction);
  for (int v = s.v_min; v <= s.v_max(); ++v) {
    const auto row = static_cast<std::size_t>((v + ph) % ph) * static_cast<std::size_t>(pw);
    for (int u = s.u_min; u <= s.u_max(); ++u) {
      const auto p = row + static_cast<std::size_t>((u + pw) % pw);
      const double n_real = std::round(planes[0][p]);
      const auto idx = s.index(u, v);
      if (n_real < 0.5) continue;
      const auto n = static_cast<std::size_t>(n_real);
      s.overlap[idx] = n;
      if (n < need) continue;
      double gamma = 0.0;
      if (gamma_from_sums(n_real, planes[1][p], planes[2][p], planes[3][p], planes[4][p],
                          planes[5][p], gamma)) {
        s.values[idx] = gamma;
        s.valid[idx] = 1;
      }
    }
  }
  finish_surface(s);
  return s;
}

CorrelationSurface correlation_surface(const Image& e, const MaskedImage& c,
                                       double min_overlap_fraction) {
  check_fraction(min_overlap_fraction);
  const int pw = zncc_pad_extent(e.width(), c.image.width());
  const int ph = zncc_pad_extent(e.height(), c.image.height());
  const ZnccReference ref(e, pw, ph);
  const ZnccCandidate cand(c, pw, ph);
  return correlation_surface(ref, cand, 0, min_overlap_fraction);
}

CorrelationSurface correlation_surface(const Image& e, const Image& c, double min_overlap_fraction) {
  return correlation_surface(e, unmasked(c), min_overlap_fraction);
}

ZnccResult zncc_score(const ZnccReference& e, const ZnccCandidate& c, const ZnccConfig& cfg) {
  cfg.validate();
  ZnccResult result;
  bool found = false;
  for (std::size_t i = 0; i < c.angle_count(); ++i) {
    try {
      const auto peak = surface_peak(correlation_surface(e, c, i, cfg.min_overlap_fraction));
      if (!found || peak.value > result.score) {
        result.score = peak.value;
        result.best_angle_deg = c.angle_deg(i);
        result.best_u = peak.u;
        result.best_v = peak.v;
        found = true;
      }
    } catch (const DegenerateInputError&) {
      // Angle contributes nothing.
    }
  }
  if (!found) {
    result = ZnccResult{};
    result.degenerate = true;
  }
  return result;
}

ZnccResult zncc_score(const Image& e, const Image& c, const ZnccConfig& cfg) {
  cfg.validate();
  const int pw = zncc_pad_extent(e.width(), c.width());
  const int ph = zncc_pad_extent(e.height(), c.height());
  return zncc_score(ZnccReference(e, pw, ph), ZnccCandidate(c, cfg, pw, ph), cfg);
}

}  // namespace fpm

#include "fpm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace fpm {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_separators(std::istream& in) {
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

int read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  skip_pnm_separators(in);
  int v = -1;
  in >> v;
  if (!in || v < 0) throw IoError("malformed PGM header: " + path.string());
  return v;
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm";
}

Image load_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm") return load_pgm(path);
  throw IoError("unsupported image format: " + path.string());
}

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw IoError("not a binary PGM (P5): " + path.string());
  }
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw IoError("invalid PGM dimensions: " + path.string());
  }
  in.get();  // single whitespace before the raster

  const bool wide = maxval > 255;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<unsigned char> raw(n * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("truncated PGM raster: " + path.string());
  }

  std::vector<double> data(n);
  const double scale = 1.0 / maxval;
  for (std::size_t i = 0; i < n; ++i) {
    const int v = wide ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    data[i] = std::min(v, maxval) * scale;
  }
  return Image(w, h, std::move(data));
}

Image load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> raster(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("corrupt PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> data(raster.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = raster[i] / 255.0;
  return Image(w, h, std::move(data));
}

void save_pgm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> raw(img.size());
  const auto px = img.data();
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<char>(quantize(px[i]));
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void save_png(const Image& img, const std::filesystem::path& path) {
  std::vector<png_byte> raster(img.size());
  const auto px = img.data();
  for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = quantize(px[i]);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, raster.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".pgm") return save_pgm(img, path);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace fpm

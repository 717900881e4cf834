#pragma once

#include <filesystem>

#include "fpm/image.hpp"

namespace fpm {

/// Loads an 8-bit grayscale PNG or binary PGM (P5) into [0, 1] intensities.
/// Color PNGs are converted to luminance. Throws IoError on failure.
Image load_image(const std::filesystem::path& path);

Image load_pgm(const std::filesystem::path& path);
Image load_png(const std::filesystem::path& path);

/// Writes intensities clamped to [0, 1] and quantized to 8 bits.
void save_pgm(const Image& img, const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

/// Dispatches on the file extension (.png or .pgm).
void save_image(const Image& img, const std::filesystem::path& path);

/// True for extensions load_image understands.
bool is_supported_image(const std::filesystem::path& path);

}  // namespace fpm

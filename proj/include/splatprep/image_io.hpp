#pragma once

#include <filesystem>
#include <vector>

#include "splatprep/image.hpp"

namespace splatprep {

/// 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) and binary/ASCII
/// PGM/PPM. Alpha is dropped. Throws IoError or ParseError.
Image load_image(const std::filesystem::path& path);

/// Format chosen by extension: .png, .pgm, .ppm (.pnm picks by channels).
void save_image(const Image& image, const std::filesystem::path& path);
void save_image(const GrayImage& image, const std::filesystem::path& path);

bool is_supported_image(const std::filesystem::path& path);

/// Supported image files in a directory, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace splatprep

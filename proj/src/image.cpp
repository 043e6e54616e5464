#include "splatprep/image.hpp"

#include <algorithm>
#include <cmath>

#include "splatprep/error.hpp"

namespace splatprep {
namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) throw UsageError("image dimensions must be positive");
}

}  // namespace

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw UsageError("image must have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw UsageError("image must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw UsageError("image buffer size does not match dimensions");
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    throw UsageError("pixel count does not match width x height");
}

BitMask::BitMask(int width, int height, bool fill) : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BitMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BitMask BitMask::operator&(const BitMask& other) const {
  if (width_ != other.width_ || height_ != other.height_) throw UsageError("mask dimensions differ");
  BitMask out(width_, height_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

GrayImage to_gray(const Image& image) {
  if (image.channels() == 1)
    return GrayImage(image.width(), image.height(),
                     std::vector<std::uint8_t>(image.data().begin(), image.data().end()));
  GrayImage out(image.width(), image.height());
  auto src = image.data();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return out;
}

Image to_image(const GrayImage& gray) {
  return Image(gray.width(), gray.height(), 1,
               std::vector<std::uint8_t>(gray.pixels().begin(), gray.pixels().end()));
}

Image resize_bilinear(const Image& image, int width, int height) {
  check_dims(width, height);
  if (image.empty()) throw UsageError("cannot resize an empty image");
  if (width == image.width() && height == image.height()) return image;
  Image out(width, height, image.channels());
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = (1 - wx) * image.at(x0, y0, c) + wx * image.at(x1, y0, c);
        const double bottom = (1 - wx) * image.at(x0, y1, c) + wx * image.at(x1, y1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround((1 - wy) * top + wy * bottom));
      }
    }
  }
  return out;
}

}  // namespace splatprep

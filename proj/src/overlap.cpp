#include "splatprep/overlap.hpp"

#include <array>

#include "splatprep/error.hpp"

namespace splatprep {

int otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (std::uint8_t v : img.pixels()) hist[v] += 1.0;
  const double total = static_cast<double>(img.pixels().size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double w0 = 0.0, s0 = 0.0;
  double best = -1.0;
  int first = -1, last = -1;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    s0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = s0 / w0 - (sum_all - s0) / w1;
    const double between = w0 * w1 * diff * diff;
    if (between > best) {
      best = between;
      first = last = t;
    } else if (between == best) {
      last = t;
    }
  }
  if (first < 0) return img.pixels().empty() ? 0 : img.pixels()[0];
  return (first + last) / 2;
}

BitMask binarize(const GrayImage& img, int threshold) {
  BitMask out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.bits();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > threshold ? 1 : 0;
  return out;
}

BitMask binarize(const GrayImage& img, BinarizeMode mode) {
  return binarize(img, mode.kind == BinarizeMode::Kind::otsu ? otsu_threshold(img) : mode.threshold);
}

std::optional<double> overlap_percent(const BitMask& warped, const BitMask& adjacent) {
  if (warped.width() != adjacent.width() || warped.height() != adjacent.height())
    throw UsageError("overlap masks differ in size");
  std::size_t denom = 0, both = 0;
  auto a = warped.bits();
  auto b = adjacent.bits();
  for (std::size_t i = 0; i < a.size(); ++i) {
    denom += a[i];
    both += a[i] & b[i];
  }
  if (denom == 0) return std::nullopt;
  return 100.0 * static_cast<double>(both) / static_cast<double>(denom);
}

}  // namespace splatprep

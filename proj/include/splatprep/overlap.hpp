#pragma once

#include <optional>

#include "splatprep/image.hpp"

namespace splatprep {

struct BinarizeMode {
  enum class Kind { otsu, fixed };
  Kind kind = Kind::otsu;
  int threshold = 127;  ///< used by Kind::fixed

  static BinarizeMode otsu() { return {}; }
  static BinarizeMode fixed(int t) { return {Kind::fixed, t}; }
};

/// Threshold T in [0, 255] maximising the between-class variance of
/// {I <= T} vs {I > T}. When several T tie (empty histogram bins), the
/// midpoint of the first and last maximiser is used. A constant image yields
/// its own intensity (every pixel then falls in the low class).
int otsu_threshold(const GrayImage& img);

/// bit = intensity > threshold.
BitMask binarize(const GrayImage& img, int threshold);
BitMask binarize(const GrayImage& img, BinarizeMode mode);

/// 100 * |warped AND adjacent| / |warped|; nullopt when warped is empty.
/// Throws UsageError on a dimension mismatch.
std::optional<double> overlap_percent(const BitMask& warped, const BitMask& adjacent);

}  // namespace splatprep

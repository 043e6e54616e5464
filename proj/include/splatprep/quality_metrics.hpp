#pragma once

#include <limits>

#include "splatprep/image.hpp"
#include "splatprep/kernels.hpp"

namespace splatprep {

/// Reference/rendered pair; the constructor checks matching geometry.
class ImagePair {
 public:
  ImagePair(const Image& observed, const Image& rendered);

  const Image& observed() const noexcept { return *observed_; }
  const Image& rendered() const noexcept { return *rendered_; }

 private:
  const Image* observed_;
  const Image* rendered_;
};

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

void validate(const SsimParams& params);
kernels::SsimWindow make_ssim_window(const SsimParams& params);

/// Mean |observed - rendered| over all samples, intensities scaled to [0, 1].
double l1_loss(const ImagePair& pair);

/// Mean Gaussian-windowed SSIM over every full window position, averaged
/// across channels. Throws UsageError if the image is smaller than the window.
double ssim(const ImagePair& pair, const SsimParams& params = {});

/// (1 - lambda) * L1 + lambda * (1 - SSIM).
double combined_loss(const ImagePair& pair, double lambda = 0.2, const SsimParams& params = {});

/// Mean squared error over raw 8-bit samples pooled across channels.
double mse(const ImagePair& pair);

/// 10 log10(255^2 / MSE). Identical images give +infinity, serialised as
/// "inf" in reports.
double psnr(const ImagePair& pair);

inline bool is_identical_sentinel(double psnr_db) { return psnr_db == std::numeric_limits<double>::infinity(); }

}  // namespace splatprep

#include "splatprep/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splatprep/error.hpp"
#include "splatprep/kernels.hpp"

namespace splatprep {
namespace {

constexpr int kOrbPattern[256 * 4] = {
#include "orb_pattern.inc"
};

// Descriptor orientation is snapped to multiples of this step.
constexpr double kAngleStep = 1.0 / 30.0;
constexpr int kMaxBin = 95;  // ceil(pi / kAngleStep)

struct RotatedPattern {
  std::array<std::array<int, 4>, 256> pairs;
};

const RotatedPattern& rotated_pattern(float theta) {
  static const std::vector<RotatedPattern> tables = [] {
    std::vector<RotatedPattern> t(2 * kMaxBin + 1);
    for (int bin = -kMaxBin; bin <= kMaxBin; ++bin) {
      const double a = bin * kAngleStep;
      const double c = std::cos(a);
      const double s = std::sin(a);
      auto& table = t[bin + kMaxBin];
      for (int i = 0; i < 256; ++i) {
        const int* p = kOrbPattern + 4 * i;
        for (int k = 0; k < 2; ++k) {
          const double x = p[2 * k];
          const double y = p[2 * k + 1];
          table.pairs[i][2 * k] = static_cast<int>(std::lround(c * x - s * y));
          table.pairs[i][2 * k + 1] = static_cast<int>(std::lround(s * x + c * y));
        }
      }
    }
    return t;
  }();
  const int bin = std::clamp(static_cast<int>(std::lround(theta / kAngleStep)), -kMaxBin, kMaxBin);
  return tables[bin + kMaxBin];
}

}  // namespace

float segment_test_score(const GrayImage& img, int x, int y, int threshold, int n_contig) {
  const int center = img.at(x, y);
  int diff[16];
  for (int i = 0; i < 16; ++i) diff[i] = img.at(x + kFastCircle[i][0], y + kFastCircle[i][1]) - center;

  float best = 0.0f;
  for (int sign : {1, -1}) {
    bool pass[16];
    int passing = 0;
    for (int i = 0; i < 16; ++i) {
      pass[i] = sign * diff[i] > threshold;
      passing += pass[i];
    }
    if (passing < n_contig) continue;
    if (passing == 16) {
      int sum = 0;
      for (int d : diff) sum += std::abs(d);
      best = std::max(best, static_cast<float>(sum));
      continue;
    }
    // Walk the circle once starting just after a failing position so every
    // maximal run is seen whole.
    int start = 0;
    while (pass[start]) ++start;
    int run = 0;
    int sum = 0;
    for (int step = 1; step <= 16; ++step) {
      const int i = (start + step) % 16;
      if (pass[i]) {
        ++run;
        sum += std::abs(diff[i]);
      } else {
        if (run >= n_contig) best = std::max(best, static_cast<float>(sum));
        run = 0;
        sum = 0;
      }
    }
  }
  return best;
}

std::vector<Keypoint> detect_corners(const GrayImage& img, const FastParams& params) {
  if (img.width() < 7 || img.height() < 7) throw UsageError("corner detection needs an image of at least 7x7");
  if (params.n_contig < 1 || params.n_contig > 16) throw UsageError("n_contig must be in [1, 16]");
  const int border = std::max(params.border, 3);
  const int w = img.width();
  const int h = img.height();
  const std::vector<float> scores = kernels::omp::segment_test_scores(img, params.threshold, params.n_contig, border);

  std::vector<Keypoint> out;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const float s = scores[static_cast<std::size_t>(y) * w + x];
      if (s <= 0.0f) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float ns = scores[static_cast<std::size_t>(y + dy) * w + x + dx];
          // Plateaus keep their first pixel in raster order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? !(s > ns) : !(s >= ns)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({x, y, s, 0.0f});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
  if (out.size() > params.max_features) out.resize(params.max_features);
  return out;
}

float orient(const GrayImage& img, const Keypoint& kp, int r) {
  if (kp.x - r < 0 || kp.y - r < 0 || kp.x + r >= img.width() || kp.y + r >= img.height())
    throw UsageError("orientation patch extends outside the image");
  std::int64_t m00 = 0, m10 = 0, m01 = 0;
  for (int v = -r; v <= r; ++v) {
    for (int u = -r; u <= r; ++u) {
      if (u * u + v * v > r * r) continue;
      const int i = img.at(kp.x + u, kp.y + v);
      m00 += i;
      m10 += static_cast<std::int64_t>(u) * i;
      m01 += static_cast<std::int64_t>(v) * i;
    }
  }
  if (m00 == 0) return 0.0f;
  return static_cast<float>(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));
}

GrayImage smooth_for_descriptor(const GrayImage& img) {
  constexpr int kRadius = 2;
  double k[2 * kRadius + 1];
  double norm = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) norm += k[i + kRadius] = std::exp(-(i * i) / 8.0);
  for (double& v : k) v /= norm;

  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i) acc += k[i + kRadius] * img.at(std::clamp(x + i, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i)
        acc += k[i + kRadius] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  return out;
}

BinaryDescriptor describe(const GrayImage& smoothed, const Keypoint& kp) {
  if (kp.x < kDescriptorBorder || kp.y < kDescriptorBorder || kp.x >= smoothed.width() - kDescriptorBorder ||
      kp.y >= smoothed.height() - kDescriptorBorder)
    throw UsageError("descriptor pattern extends outside the image");
  const RotatedPattern& pattern = rotated_pattern(kp.theta);
  BinaryDescriptor d;
  for (int i = 0; i < 256; ++i) {
    const auto& p = pattern.pairs[i];
    if (smoothed.at(kp.x + p[0], kp.y + p[1]) < smoothed.at(kp.x + p[2], kp.y + p[3])) d.set_bit(i);
  }
  return d;
}

std::vector<DescriptorMatch> match(std::span<const BinaryDescriptor> a, std::span<const BinaryDescriptor> b,
                                   const MatchParams& params) {
  std::vector<DescriptorMatch> out;
  if (a.empty() || b.empty()) return out;
  const auto forward = kernels::omp::hamming_nearest(a, b);
  std::vector<kernels::HammingNearest> backward;
  if (params.cross_check) backward = kernels::omp::hamming_nearest(b, a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& f = forward[i];
    if (f.best_distance > params.max_distance) continue;
    if (params.cross_check && backward[f.best].best != i) continue;
    if (params.ratio > 0.0 && b.size() > 1 && !(f.best_distance < params.ratio * f.second_distance)) continue;
    out.push_back({i, f.best, f.best_distance});
  }
  return out;
}

FrameFeatures extract_features(const GrayImage& img, FastParams params) {
  params.border = std::max(params.border, kDescriptorBorder);
  FrameFeatures f;
  if (img.width() <= 2 * params.border || img.height() <= 2 * params.border) return f;
  f.keypoints = detect_corners(img, params);
  const GrayImage smoothed = smooth_for_descriptor(img);
  f.descriptors.reserve(f.keypoints.size());
  for (Keypoint& kp : f.keypoints) {
    kp.theta = orient(img, kp);
    f.descriptors.push_back(describe(smoothed, kp));
  }
  return f;
}

}  // namespace splatprep

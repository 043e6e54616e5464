#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "splatprep/image.hpp"

namespace splatprep {

struct Keypoint {
  int x = 0;
  int y = 0;
  float score = 0.0f;
  float theta = 0.0f;  ///< radians, (-pi, pi]

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// 256-bit rotated-BRIEF descriptor.
struct BinaryDescriptor {
  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1U; }
  void set_bit(int i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }

  friend bool operator==(const BinaryDescriptor&, const BinaryDescriptor&) = default;
};

inline int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  return std::popcount(a.words[0] ^ b.words[0]) + std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) + std::popcount(a.words[3] ^ b.words[3]);
}

struct FastParams {
  int threshold = 20;
  int n_contig = 9;
  std::size_t max_features = 1000;
  /// Pixels closer than this to the border are never tested. At least 3 (the
  /// circle radius); the frame sampler raises it so descriptors fit.
  int border = 3;
};

/// Offsets of the 16-pixel Bresenham circle of radius 3, clockwise from the
/// top.
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

/// Segment-test response at (x, y): largest sum of |I(p_i) - I(p)| over a
/// circular run of at least n_contig circle pixels that are all brighter
/// than I(p) + t or all darker than I(p) - t. Zero when no run qualifies.
float segment_test_score(const GrayImage& img, int x, int y, int threshold, int n_contig);

/// Corners that pass the segment test and survive 3x3 non-maximum
/// suppression, best score first (ties by row, then column), truncated to
/// max_features. Uniform images yield an empty list.
std::vector<Keypoint> detect_corners(const GrayImage& img, const FastParams& params);

inline constexpr int kPatchRadius = 15;
/// Keypoints need this much margin for the rotated 31x31 sampling pattern.
inline constexpr int kDescriptorBorder = 19;

/// Intensity-centroid orientation atan2(m01, m10) over the disc of the given
/// radius centred on the keypoint. Zero for an all-black patch.
float orient(const GrayImage& img, const Keypoint& kp, int patch_radius = kPatchRadius);

/// Smoothing applied before sampling descriptors (5x5 Gaussian, sigma 2).
GrayImage smooth_for_descriptor(const GrayImage& img);

/// Bit i is set iff I(p_i) < I(q_i) for the i-th ORB point pair rotated by
/// the keypoint orientation (snapped to 1/30 rad). Expects a smoothed image
/// and a keypoint at least kDescriptorBorder pixels from every edge.
BinaryDescriptor describe(const GrayImage& smoothed, const Keypoint& kp);

struct DescriptorMatch {
  std::size_t query = 0;  ///< index into A
  std::size_t train = 0;  ///< index into B
  int distance = 0;

  friend bool operator==(const DescriptorMatch&, const DescriptorMatch&) = default;
};

struct MatchParams {
  bool cross_check = true;
  /// Lowe ratio; <= 0 disables the test.
  double ratio = 0.0;
  /// Matches above this Hamming distance are dropped; 256 keeps everything.
  int max_distance = 256;
};

/// Brute-force Hamming matching. Each query keeps its nearest train
/// descriptor (lowest index on ties); with cross_check the pair must also be
/// the train descriptor's nearest query.
std::vector<DescriptorMatch> match(std::span<const BinaryDescriptor> a, std::span<const BinaryDescriptor> b,
                                   const MatchParams& params = {});

struct FrameFeatures {
  std::vector<Keypoint> keypoints;
  std::vector<BinaryDescriptor> descriptors;
};

/// detect -> orient -> describe with the descriptor border enforced.
FrameFeatures extract_features(const GrayImage& img, FastParams params);

}  // namespace splatprep

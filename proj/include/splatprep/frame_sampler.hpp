#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splatprep/features.hpp"
#include "splatprep/homography.hpp"
#include "splatprep/image.hpp"
#include "splatprep/overlap.hpp"

namespace splatprep {

struct SamplerParams {
  double target_overlap = 80.0;  ///< percent, (0, 100)
  FastParams fast{};
  MatchParams matching{};
  RansacParams ransac{};
  BinarizeMode binarize = BinarizeMode::otsu();
  /// Fewer RANSAC inliers than this counts as a failed homography.
  std::size_t min_inliers = 12;
};

struct PairOverlap {
  std::size_t matches = 0;
  std::size_t inliers = 0;
  std::optional<Homography> anchor_to_candidate;
  std::optional<double> overlap;  ///< percent
  std::string failure;            ///< empty on success
};

/// Overlap of the anchor's content with an adjacent frame. The adjacent
/// frame is resampled into the anchor's coordinates through H; the warped
/// mask is the anchor's binarised content and the adjacent mask is the
/// resampled frame's content ANDed with the resampling validity mask. Both
/// are binarised with a threshold computed on the anchor.
std::optional<double> content_overlap(const GrayImage& anchor, const GrayImage& adjacent,
                                      const Homography& anchor_to_adjacent, BinarizeMode mode);

PairOverlap measure_pair(const GrayImage& anchor, const FrameFeatures& anchor_features,
                         const GrayImage& candidate, const FrameFeatures& candidate_features,
                         const SamplerParams& params, std::uint64_t seed);

struct PairLogEntry {
  std::size_t anchor = 0;
  std::size_t candidate = 0;
  PairOverlap result;
};

struct FrameSelection {
  std::vector<std::size_t> selected;  ///< strictly increasing, starts at 0
  std::vector<std::size_t> skipped;   ///< frames whose pair with the anchor failed
  std::vector<PairLogEntry> pairs;
};

using FrameLoader = std::function<GrayImage(std::size_t)>;
using PairMeasure = std::function<PairOverlap(std::size_t anchor, std::size_t candidate)>;

/// Greedy scan: starting from the last selected frame, keep the last frame
/// whose overlap with it is >= target and select it once overlap drops
/// below target. If the very next usable frame is already below target it
/// is selected directly. When the sequence ends while overlap is still above
/// target, the last usable frame is selected. Frames whose homography fails
/// are skipped and logged.
FrameSelection greedy_select(std::size_t frame_count, const PairMeasure& measure, double target_overlap);

/// greedy_select over ORB matches and RANSAC homographies.
FrameSelection select_frames(std::size_t frame_count, const FrameLoader& load, const SamplerParams& params);
FrameSelection select_frames(std::span<const GrayImage> frames, const SamplerParams& params);

}  // namespace splatprep

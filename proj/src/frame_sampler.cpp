#include "splatprep/frame_sampler.hpp"

#include <algorithm>
#include <set>

#include "splatprep/error.hpp"
#include "splatprep/log.hpp"
#include "splatprep/rng.hpp"

namespace splatprep {

std::optional<double> content_overlap(const GrayImage& anchor, const GrayImage& adjacent,
                                      const Homography& anchor_to_adjacent, BinarizeMode mode) {
  const int threshold = mode.kind == BinarizeMode::Kind::otsu ? otsu_threshold(anchor) : mode.threshold;
  const BitMask warped = binarize(anchor, threshold);
  // warp() samples its source at H^-1(x); passing the inverse makes anchor
  // pixel x read the adjacent frame at H(x).
  const WarpResult pulled = warp(adjacent, anchor_to_adjacent.inverse(), anchor.width(), anchor.height());
  const BitMask adjacent_mask = binarize(pulled.image, threshold) & pulled.valid;
  return overlap_percent(warped, adjacent_mask);
}

PairOverlap measure_pair(const GrayImage& anchor, const FrameFeatures& anchor_features, const GrayImage& candidate,
                         const FrameFeatures& candidate_features, const SamplerParams& params, std::uint64_t seed) {
  PairOverlap r;
  const auto matches = match(anchor_features.descriptors, candidate_features.descriptors, params.matching);
  r.matches = matches.size();
  if (matches.size() < std::max<std::size_t>(4, params.min_inliers)) {
    r.failure = "too few matches";
    return r;
  }
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) {
    const Keypoint& a = anchor_features.keypoints[m.query];
    const Keypoint& b = candidate_features.keypoints[m.train];
    pairs.push_back({Vec2(a.x, a.y), Vec2(b.x, b.y)});
  }
  RansacParams ransac = params.ransac;
  ransac.seed = seed;
  try {
    HomographyFit fit = estimate_homography(pairs, ransac);
    r.inliers = fit.inliers.size();
    if (r.inliers < params.min_inliers) {
      r.failure = "too few RANSAC inliers";
      return r;
    }
    r.anchor_to_candidate = fit.h;
    r.overlap = content_overlap(anchor, candidate, fit.h, params.binarize);
    if (!r.overlap) r.failure = "anchor content mask is empty";
  } catch (const Error& e) {
    r.failure = e.what();
  }
  return r;
}

FrameSelection greedy_select(std::size_t frame_count, const PairMeasure& measure, double target_overlap) {
  if (frame_count == 0) throw UsageError("frame selection needs at least one frame");
  if (!(target_overlap > 0.0 && target_overlap < 100.0)) throw UsageError("target overlap must lie in (0, 100)");

  FrameSelection out;
  out.selected.push_back(0);
  std::set<std::size_t> skipped;
  std::size_t anchor = 0;
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::size_t candidate = none;

  auto select = [&](std::size_t f) {
    out.selected.push_back(f);
    anchor = f;
    candidate = none;
  };

  std::size_t j = 1;
  while (j < frame_count) {
    PairOverlap r = measure(anchor, j);
    const bool failed = !r.failure.empty();
    const double ol = r.overlap.value_or(0.0);
    out.pairs.push_back({anchor, j, std::move(r)});
    if (failed) {
      log().info("frame {} skipped against anchor {}: {}", j, anchor, out.pairs.back().result.failure);
      skipped.insert(j);
      ++j;
      continue;
    }
    if (ol >= target_overlap) {
      candidate = j;
      ++j;
      continue;
    }
    if (candidate != none) {
      const std::size_t c = candidate;
      select(c);
      j = c + 1;
    } else {
      select(j);
      ++j;
    }
  }
  if (candidate != none) select(candidate);

  for (std::size_t s : out.selected) skipped.erase(s);
  out.skipped.assign(skipped.begin(), skipped.end());
  return out;
}

FrameSelection select_frames(std::size_t frame_count, const FrameLoader& load, const SamplerParams& params) {
  if (frame_count == 0) throw UsageError("frame selection needs at least one frame");
  if (!(params.target_overlap > 0.0 && params.target_overlap < 100.0))
    throw UsageError("target overlap must lie in (0, 100)");

  // The loader is called concurrently here.
  std::vector<FrameFeatures> features(frame_count);
  std::vector<std::string> errors(frame_count);
  const auto n = static_cast<std::ptrdiff_t>(frame_count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      features[i] = extract_features(load(static_cast<std::size_t>(i)), params.fast);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < frame_count; ++i)
    if (!errors[i].empty()) throw Error("frame " + std::to_string(i) + ": " + errors[i]);

  std::size_t cached_index = 0;
  GrayImage cached = load(0);
  auto measure = [&](std::size_t anchor, std::size_t j) {
    if (anchor != cached_index) {
      cached = load(anchor);
      cached_index = anchor;
    }
    const std::uint64_t seed = derive_seed(params.ransac.seed, anchor * frame_count + j);
    return measure_pair(cached, features[anchor], load(j), features[j], params, seed);
  };
  return greedy_select(frame_count, measure, params.target_overlap);
}

FrameSelection select_frames(std::span<const GrayImage> frames, const SamplerParams& params) {
  return select_frames(frames.size(), [&](std::size_t i) { return frames[i]; }, params);
}

}  // namespace splatprep

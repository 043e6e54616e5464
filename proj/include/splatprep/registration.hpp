#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "splatprep/kernels.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/point_cloud.hpp"
#include "splatprep/spatial_index.hpp"
#include "splatprep/transforms.hpp"

namespace splatprep {

/// Closed-form least-squares similarity (Umeyama) taking src onto dst.
/// Throws UsageError on a size mismatch or fewer than 3 pairs and
/// DegenerateError when the source points are collinear.
SimilarityTransform estimate_similarity(std::span<const Vec3> src, std::span<const Vec3> dst);

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;  ///< in source order
  double matched_fraction = 0.0;
};

/// Nearest destination point of every source point, kept if within cap.
CorrespondenceSet nearest_correspondences(std::span<const Vec3> src, const SpatialIndex& dst, double cap);
CorrespondenceSet nearest_correspondences(const PointCloud& src, const SpatialIndex& dst, double cap);

/// Orthogonal Procrustes (Kabsch) on the paired points, reflection-corrected.
/// Throws DegenerateError for fewer than 3 pairs or collinear sources.
RigidTransform best_rigid(std::span<const Correspondence> pairs, std::span<const Vec3> src,
                          std::span<const Vec3> dst);

/// Sum over pairs of |dst - T(src)|^2.
double alignment_error(const RigidTransform& t, std::span<const Correspondence> pairs,
                       std::span<const Vec3> src, std::span<const Vec3> dst);

struct IcpParams {
  int max_iterations = 50;  ///< per phase
  double phase1_fraction = 0.90;
  double phase2_fraction = 0.99;
  /// Caps as a fraction of the destination bounding-box diagonal...
  double phase1_cap_ratio = 0.05;
  double phase2_cap_ratio = 0.01;
  /// ...unless given in metres.
  std::optional<double> phase1_cap;
  std::optional<double> phase2_cap;
  double epsilon = 1e-8;  ///< relative decrease of the RMS error
  std::size_t max_source_points = 100000;
  std::uint64_t seed = 0;
};

void validate(const IcpParams& params);

struct IcpIteration {
  int phase = 1;
  std::size_t pairs = 0;
  double matched_fraction = 0.0;
  double rms_before = 0.0;  ///< over this iteration's pairs, before the update
  double rms_after = 0.0;   ///< same pairs, after the update
  RigidTransform total;     ///< cumulative transform after the update
};

struct IcpReport {
  int phase_iterations[2] = {0, 0};
  bool phase_target_reached[2] = {false, false};
  double phase_caps[2] = {0.0, 0.0};
  double final_rms = 0.0;             ///< full source cloud, phase-2 cap
  double final_matched_fraction = 0;  ///< full source cloud, phase-2 cap
  std::vector<IcpIteration> history;  ///< accepted iterations only
};

struct IcpResult {
  /// Rigid refinement in the coarse-aligned (scaled) frame; the full
  /// alignment is SimilarityTransform::from_rigid(total) * init.
  RigidTransform total;
  SimilarityTransform full;
  IcpReport report;
};

/// Two-phase point-to-point ICP. init is applied to src first (scale is
/// frozen from then on). Phase 1 iterates until the matched fraction under
/// its cap reaches phase1_fraction, the RMS stops decreasing by more than
/// epsilon (relative), or max_iterations; phase 2 continues from there under
/// the tighter cap until convergence or max_iterations and records whether
/// phase2_fraction was reached. Throws NoOverlapError when no source point
/// lies within the phase-1 cap at the start.
IcpResult icp(const PointCloud& src, const PointCloud& dst, const SimilarityTransform& init,
              const IcpParams& params);

struct FuseSummary {
  std::size_t sfm_points = 0;
  std::size_t lidar_points = 0;
  std::size_t total_points = 0;
  std::filesystem::path manifest;
};

/// Writes sfm followed by lidar_aligned as one PLY plus a sidecar
/// "<out>.sources.json" recording which vertex range came from which source.
FuseSummary fuse(const PointCloud& sfm, const PointCloud& lidar_aligned, const std::filesystem::path& out,
                 const PlyWriteOptions& options = {});

/// Correspondence text file: six reals per line (lidar xyz, sfm xyz), '#'
/// starts a comment. Throws ParseError with the offending line.
struct PickedPairs {
  std::vector<Vec3> lidar;
  std::vector<Vec3> sfm;
};
PickedPairs load_pairs(const std::filesystem::path& path);

}  // namespace splatprep

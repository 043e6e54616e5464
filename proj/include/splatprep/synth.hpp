#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "splatprep/point_cloud.hpp"
#include "splatprep/transforms.hpp"

namespace splatprep {

struct SynthParams {
  std::size_t frames = 200;
  int width = 210;
  int height = 150;
  double step_px = 4.0;  ///< horizontal camera pan per frame
  std::size_t lidar_points = 30000;
  std::size_t outliers = 300;  ///< extra isolated LiDAR points
  std::size_t sfm_points = 20000;
  std::size_t palette = 150;
  double noise = 0.005;  ///< metres, per axis, both clouds
  bool distort = false;  ///< render through a lens model and write intrinsics
  std::uint64_t seed = 7;
};

struct SynthTruth {
  std::size_t frames = 0;
  std::vector<std::size_t> expected_selected;
  std::size_t lidar_points = 0;  ///< including outliers
  std::size_t injected_outliers = 0;
  std::size_t sfm_points = 0;
  SimilarityTransform lidar_to_sfm;

  nlohmann::json to_json() const;
};

/// Writes a mini-scene into dir:
///   frames/frame_NNNN.png  panning view of a procedural texture
///   lidar.ply              three coloured planes plus isolated outliers
///   sfm.ply                resampling of the planes through lidar_to_sfm
///   pairs.txt              picked lidar/sfm correspondences
///   intrinsics.txt         only with distort
///   config.json            pipeline config writing to dir/out
///   truth.json
/// The expected frame selection is computed from the known translations.
SynthTruth generate_scene(const std::filesystem::path& dir, const SynthParams& params = {});

/// Point on one of the scene planes; exposed for tests.
struct ScenePlanes {
  static constexpr double kX = 6.0, kY = 4.0, kZ = 3.0;
  /// Distance from p to the nearest plane patch.
  static double distance(const Vec3& p);
};

}  // namespace splatprep

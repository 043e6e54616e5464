#pragma once

#include <filesystem>

#include "splatprep/point_cloud.hpp"

namespace splatprep {

enum class PlyFormat { ascii, binary_le };

enum class PlyPrecision { float32, float64 };

struct PlyWriteOptions {
  PlyFormat format = PlyFormat::binary_le;
  /// float64 keeps binary round trips bit-exact.
  PlyPrecision precision = PlyPrecision::float64;
  /// Significant digits for ASCII coordinates.
  int ascii_digits = 9;
  /// Emit nx/ny/nz = 0 for trainers whose readers insist on normals.
  bool zero_normals = false;
};

/// Reads element "vertex" (x, y, z and optional red/green/blue or r/g/b).
/// Other elements and properties are skipped. Throws ParseError,
/// TruncationError, DataError or IoError.
PointCloud load_ply(const std::filesystem::path& path, SourceTag tag = SourceTag::lidar);

void save_ply(const PointCloud& cloud, const std::filesystem::path& path,
              const PlyWriteOptions& options = {});

inline void save_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  PlyWriteOptions options;
  options.format = format;
  save_ply(cloud, path, options);
}

}  // namespace splatprep

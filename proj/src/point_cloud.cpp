#include "splatprep/point_cloud.hpp"

#include <limits>

namespace splatprep {

std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::lidar: return "lidar";
    case SourceTag::sfm: return "sfm";
    case SourceTag::fused: return "fused";
  }
  return "unknown";
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  PointCloud out(tag_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points_[i]);
  return out;
}

double PointCloud::bbox_diagonal() const {
  if (points_.empty()) return 0.0;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Point& p : points_) {
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  return (hi - lo).norm();
}

}  // namespace splatprep

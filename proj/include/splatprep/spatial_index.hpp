#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "splatprep/point_cloud.hpp"

namespace splatprep {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static k-d tree over a snapshot of point positions.
///
/// Neighbors are ordered by (squared distance, point index), so equal
/// distances resolve to the lower index. This makes every query reproducible
/// against a brute-force scan that uses the same ordering.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(const PointCloud& cloud);
  explicit SpatialIndex(std::vector<Vec3> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }
  const Vec3& position(std::size_t i) const { return positions_[i]; }

  /// min(k, size()) nearest neighbors, nearest first. Throws UsageError on
  /// an empty index or k == 0.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  /// Single nearest neighbor within max_distance (inclusive). Returns false
  /// when nothing lies inside the cap.
  bool nearest_within(const Vec3& query, double max_distance, Neighbor& out) const;

 private:
  struct Node {
    // Leaves: [begin, end) into order_. Inner nodes: children + split.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double split = 0.0;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  template <class Visitor>
  void search(std::int32_t node, const Vec3& query, Visitor& visitor) const;

  std::vector<Vec3> positions_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// Pairs ordered by (squared distance, index); shared by the index and its
/// brute-force checks.
inline bool neighbor_less(double d2a, std::size_t ia, double d2b, std::size_t ib) {
  return d2a < d2b || (d2a == d2b && ia < ib);
}

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace splatprep

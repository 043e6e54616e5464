#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace splatprep {

using Vec3 = Eigen::Vector3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Point {
  Vec3 position = Vec3::Zero();
  Rgb color;

  friend bool operator==(const Point& a, const Point& b) {
    return a.position == b.position && a.color == b.color;
  }
};

enum class SourceTag { lidar, sfm, fused };

std::string_view to_string(SourceTag tag);

/// Ordered point set. Insertion order is preserved through every operation
/// in this library, so downstream output is deterministic.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(SourceTag tag) : tag_(tag) {}
  PointCloud(std::vector<Point> points, SourceTag tag) : points_(std::move(points)), tag_(tag) {}

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  Point& operator[](std::size_t i) { return points_[i]; }

  std::span<const Point> points() const noexcept { return points_; }
  std::vector<Point>& mutable_points() noexcept { return points_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  void push_back(const Point& p) { points_.push_back(p); }
  void reserve(std::size_t n) { points_.reserve(n); }

  SourceTag source_tag() const noexcept { return tag_; }
  void set_source_tag(SourceTag tag) noexcept { tag_ = tag; }

  /// Points at the given indices, in the order given.
  PointCloud select(std::span<const std::size_t> indices) const;

  /// Axis-aligned bounding box diagonal length; 0 for empty clouds.
  double bbox_diagonal() const;

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.tag_ == b.tag_ && a.points_ == b.points_;
  }

 private:
  std::vector<Point> points_;
  SourceTag tag_ = SourceTag::lidar;
};

}  // namespace splatprep

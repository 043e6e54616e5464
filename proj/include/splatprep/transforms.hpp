#pragma once

#include <Eigen/Core>

#include "splatprep/point_cloud.hpp"

namespace splatprep {

using Mat3d = Eigen::Matrix3d;

/// x -> R x + t.
struct RigidTransform {
  Mat3d rotation = Mat3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (a * b)(x) = a(b(x)).
  RigidTransform operator*(const RigidTransform& rhs) const;

  static RigidTransform identity() { return {}; }
};

/// x -> s R x + t.
struct SimilarityTransform {
  double scale = 1.0;
  Mat3d rotation = Mat3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  SimilarityTransform inverse() const;
  SimilarityTransform operator*(const SimilarityTransform& rhs) const;

  static SimilarityTransform identity() { return {}; }
  static SimilarityTransform from_rigid(const RigidTransform& r) { return {1.0, r.rotation, r.translation}; }
};

/// True when R^T R = I and det R = +1 within tol.
bool is_rotation(const Mat3d& r, double tol = 1e-9);

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3d& r);

Mat3d axis_angle(const Vec3& axis, double angle);

PointCloud apply(const RigidTransform& t, const PointCloud& cloud);
PointCloud apply(const SimilarityTransform& t, const PointCloud& cloud);

}  // namespace splatprep

#include "splatprep/transforms.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace splatprep {

RigidTransform RigidTransform::inverse() const {
  const Mat3d rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

SimilarityTransform SimilarityTransform::inverse() const {
  const Mat3d rt = rotation.transpose();
  return {1.0 / scale, rt, -(rt * translation) / scale};
}

SimilarityTransform SimilarityTransform::operator*(const SimilarityTransform& rhs) const {
  return {scale * rhs.scale, rotation * rhs.rotation, scale * (rotation * rhs.translation) + translation};
}

bool is_rotation(const Mat3d& r, double tol) {
  return (r.transpose() * r - Mat3d::Identity()).cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

double rotation_angle(const Mat3d& r) {
  // Axis-angle via quaternion is better conditioned near 0 than acos(trace).
  const Eigen::Quaterniond q(r);
  const double v = q.vec().norm();
  return 2.0 * std::atan2(v, std::abs(q.w()));
}

Mat3d axis_angle(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

PointCloud apply(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (Point& p : out.mutable_points()) p.position = t.apply(p.position);
  return out;
}

PointCloud apply(const SimilarityTransform& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (Point& p : out.mutable_points()) p.position = t.apply(p.position);
  return out;
}

}  // namespace splatprep

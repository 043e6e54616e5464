#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "splatprep/image.hpp"

namespace splatprep {

using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// Projective map normalised so h33 = 1.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}
  /// Normalises by m(2,2); throws UsageError if that is zero or the matrix is
  /// singular (|det| <= 1e-12 after normalisation).
  explicit Homography(const Mat3& m);

  static Homography translation(double tx, double ty);

  const Mat3& matrix() const noexcept { return m_; }
  Vec2 apply(const Vec2& p) const;
  Homography inverse() const;
  Homography operator*(const Homography& rhs) const;

 private:
  Mat3 m_;
};

struct PointPair {
  Vec2 from;
  Vec2 to;
};

struct RansacParams {
  int iterations = 2000;
  double inlier_threshold = 3.0;  ///< px, forward reprojection error
  std::uint64_t seed = 0;
};

struct HomographyFit {
  Homography h;
  std::vector<std::size_t> inliers;  ///< ascending
};

/// Normalised DLT over all given pairs. Throws DegenerateError.
Homography fit_homography_dlt(std::span<const PointPair> pairs);

/// RANSAC over 4-point samples (samples with three collinear points are
/// rejected), then repeated least-squares refits on the inlier set until it
/// stops changing. Throws EstimationError when fewer than 4 pairs are given
/// or no sample yields a model.
HomographyFit estimate_homography(std::span<const PointPair> pairs, const RansacParams& params);

double reprojection_error(const Homography& h, const PointPair& pair);

struct WarpResult {
  GrayImage image;
  BitMask valid;
};

/// Resamples src onto a width x height canvas: output (x', y') takes the
/// bilinear sample at H^-1 (x', y'). Pixels whose preimage falls outside
/// src are 0 and marked invalid. Canvas defaults to src's size.
WarpResult warp(const GrayImage& src, const Homography& h, int width = 0, int height = 0);

}  // namespace splatprep

#pragma once

#include <filesystem>
#include <optional>

#include "splatprep/homography.hpp"
#include "splatprep/image.hpp"

namespace splatprep {

/// Pinhole intrinsics plus Brown-Conrady radial (k1, k2, k3) and tangential
/// (p1, p2) coefficients.
struct DistortionModel {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;
  double p1 = 0.0, p2 = 0.0;

  bool is_identity() const { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }
};

/// Throws UsageError unless fx, fy > 0 and every field is finite.
void validate(const DistortionModel& model);

/// Correction in normalised coordinates, distorted -> undistorted:
///   x_u = x_d (1 + k1 r^2 + k2 r^4 + k3 r^6) + 2 p1 x_d y_d + p2 (r^2 + 2 x_d^2)
///   y_u = y_d (1 + k1 r^2 + k2 r^4 + k3 r^6) + p1 (r^2 + 2 y_d^2) + 2 p2 x_d y_d
Vec2 correct_normalized(const DistortionModel& model, const Vec2& distorted);

/// Inverse of correct_normalized by Newton iteration (<= 20 steps, tol 1e-8).
/// nullopt if the iteration does not converge.
std::optional<Vec2> distort_normalized(const DistortionModel& model, const Vec2& undistorted);

/// Pixel -> pixel correction through (fx, fy, cx, cy).
Vec2 undistort_point(const DistortionModel& model, const Vec2& distorted_px);
std::optional<Vec2> distort_point(const DistortionModel& model, const Vec2& undistorted_px);

/// Output pixel u takes the bilinear sample of img at distort_point(u);
/// preimages outside img (or non-convergent ones) are black. A model with
/// zero coefficients returns img unchanged.
Image undistort_image(const DistortionModel& model, const Image& img);
GrayImage undistort_image(const DistortionModel& model, const GrayImage& img);

/// Forward resampling: output pixel d takes the sample of an undistorted
/// image at undistort_point(d). Used to synthesise distorted test imagery.
Image distort_image(const DistortionModel& model, const Image& undistorted);

/// Intrinsics text file: either "key value" lines (fx fy cx cy k1 k2 k3 p1
/// p2; '#' comments) or the nine numbers in that order.
DistortionModel load_intrinsics(const std::filesystem::path& path);

}  // namespace splatprep

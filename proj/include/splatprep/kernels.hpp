#pragma once

// Data-parallel inner loops. Every kernel exists twice: serial:: is the
// reference, omp:: splits the same per-item work across OpenMP threads and
// must produce bit-identical results (tests hold the two against each
// other; bench/ times them).

#include <cstddef>
#include <span>
#include <vector>

#include "splatprep/features.hpp"
#include "splatprep/homography.hpp"
#include "splatprep/image.hpp"
#include "splatprep/spatial_index.hpp"
#include "splatprep/undistort.hpp"

namespace splatprep {

struct Correspondence {
  std::size_t src = 0;
  std::size_t dst = 0;
  double distance = 0.0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

namespace kernels {

/// Nearest train descriptor of a query plus the runner-up distance.
struct HammingNearest {
  std::size_t best = 0;
  int best_distance = 257;
  int second_distance = 257;

  friend bool operator==(const HammingNearest&, const HammingNearest&) = default;
};

/// Normalised Gaussian window for SSIM.
struct SsimWindow {
  int size = 11;
  std::vector<double> weights;  ///< 1-D, sums to 1
  double c1 = 0.0;
  double c2 = 0.0;
};

#define SPLATPREP_KERNEL_SET                                                                         \
  /* Mean distance from every indexed point to its k nearest other points. */                       \
  std::vector<double> mean_knn_distances(const SpatialIndex& index, std::size_t k);                  \
                                                                                                     \
  /* Nearest dst point of each src point within cap, in src order. */                                \
  std::vector<Correspondence> nearest_within(std::span<const Vec3> src, const SpatialIndex& dst,     \
                                             double cap);                                            \
                                                                                                     \
  std::vector<HammingNearest> hamming_nearest(std::span<const BinaryDescriptor> queries,             \
                                              std::span<const BinaryDescriptor> train);              \
                                                                                                     \
  /* Segment-test score for every pixel; 0 outside [border, size - border). */                       \
  std::vector<float> segment_test_scores(const GrayImage& img, int threshold, int n_contig,          \
                                         int border);                                                \
                                                                                                     \
  /* Bilinear pull-back through inverse_map (output -> source). */                                   \
  WarpResult warp_bilinear(const GrayImage& src, const Mat3& inverse_map, int width, int height);    \
                                                                                                     \
  Image undistort_remap(const DistortionModel& model, const Image& src);                             \
                                                                                                     \
  /* Mean SSIM over every full window position of one channel. */                                    \
  double ssim_mean(const Image& x, const Image& y, int channel, const SsimWindow& window);

namespace serial {
SPLATPREP_KERNEL_SET
}  // namespace serial

namespace omp {
SPLATPREP_KERNEL_SET
}  // namespace omp

#undef SPLATPREP_KERNEL_SET

}  // namespace kernels
}  // namespace splatprep

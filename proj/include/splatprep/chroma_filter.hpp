#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "splatprep/point_cloud.hpp"

namespace splatprep {

struct OutlierParams {
  std::size_t k = 20;
  double alpha = 2.0;
};

/// Exact integer RGB triple shared by every point of a bucket.
struct ColorBucketKey {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  std::uint32_t packed() const noexcept { return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | b; }
  auto operator<=>(const ColorBucketKey&) const = default;
};

struct ChromaParams {
  std::size_t max_points_per_color = 10;
  std::uint64_t rng_seed = 0;
  /// Channel divisor applied before bucketing; 1 keeps exact colors.
  int quantization = 1;
};

struct OutlierStats {
  std::vector<double> mean_distances;  ///< d(p_i) for every input point
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation
  double threshold = 0.0;
  bool skipped = false;  ///< cloud had fewer than k + 1 points
};

/// Statistical outlier removal on the mean distance to the k nearest
/// neighbors: a point survives iff d(p) <= mean + alpha * stddev.
/// Clouds with fewer than k + 1 points come back unchanged with
/// stats->skipped set and a warning logged.
PointCloud remove_outliers(const PointCloud& cloud, const OutlierParams& params,
                           OutlierStats* stats = nullptr);

ColorBucketKey bucket_key(const Rgb& color, int quantization = 1);

/// Buckets in ascending key order; indices within a bucket ascending.
std::map<ColorBucketKey, std::vector<std::size_t>> bucket_by_color(const PointCloud& cloud,
                                                                   int quantization = 1);

/// Keeps min(m, n) uniformly chosen points of every bucket of size m. Each
/// bucket draws from its own stream derived from (rng_seed, key), so the
/// result does not depend on evaluation order. Output keeps input order.
PointCloud subsample_by_color(const PointCloud& cloud, const ChromaParams& params);

struct ChromaStats {
  std::size_t input_points = 0;
  std::size_t after_outliers = 0;
  std::size_t output_points = 0;
  std::size_t buckets = 0;
};

PointCloud chroma_filter(const PointCloud& cloud, const OutlierParams& outlier,
                         const ChromaParams& chroma, ChromaStats* stats = nullptr);

void validate(const OutlierParams& params);
void validate(const ChromaParams& params);

}  // namespace splatprep

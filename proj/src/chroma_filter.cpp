#include "splatprep/chroma_filter.hpp"

#include <algorithm>
#include <cmath>

#include "splatprep/error.hpp"
#include "splatprep/kernels.hpp"
#include "splatprep/log.hpp"
#include "splatprep/rng.hpp"
#include "splatprep/spatial_index.hpp"

namespace splatprep {

void validate(const OutlierParams& params) {
  if (params.k < 1) throw UsageError("outlier k must be >= 1");
  if (!(params.alpha >= 0.0) || !std::isfinite(params.alpha)) throw UsageError("outlier alpha must be finite and >= 0");
}

void validate(const ChromaParams& params) {
  if (params.max_points_per_color < 1) throw UsageError("max_points_per_color must be >= 1");
  if (params.quantization < 1 || params.quantization > 256) throw UsageError("quantization must be in [1, 256]");
}

PointCloud remove_outliers(const PointCloud& cloud, const OutlierParams& params, OutlierStats* stats) {
  validate(params);
  if (cloud.size() < params.k + 1) {
    log().warn("outlier removal skipped: {} points, need at least k + 1 = {}", cloud.size(), params.k + 1);
    if (stats) *stats = OutlierStats{{}, 0.0, 0.0, 0.0, true};
    return cloud;
  }

  const SpatialIndex index(cloud);
  std::vector<double> d = kernels::omp::mean_knn_distances(index, params.k);

  const double n = static_cast<double>(d.size());
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / n);
  const double threshold = mean + params.alpha * stddev;

  PointCloud out(cloud.source_tag());
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (d[i] <= threshold) out.push_back(cloud[i]);

  if (stats) *stats = OutlierStats{std::move(d), mean, stddev, threshold, false};
  return out;
}

ColorBucketKey bucket_key(const Rgb& c, int q) {
  if (q <= 1) return {c.r, c.g, c.b};
  return {static_cast<std::uint8_t>(c.r / q), static_cast<std::uint8_t>(c.g / q), static_cast<std::uint8_t>(c.b / q)};
}

std::map<ColorBucketKey, std::vector<std::size_t>> bucket_by_color(const PointCloud& cloud, int quantization) {
  std::map<ColorBucketKey, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < cloud.size(); ++i) buckets[bucket_key(cloud[i].color, quantization)].push_back(i);
  return buckets;
}

PointCloud subsample_by_color(const PointCloud& cloud, const ChromaParams& params) {
  validate(params);
  const auto buckets = bucket_by_color(cloud, params.quantization);
  const std::size_t cap = params.max_points_per_color;

  std::vector<std::uint8_t> keep(cloud.size(), 0);
  for (const auto& [key, members] : buckets) {
    if (members.size() <= cap) {
      for (std::size_t i : members) keep[i] = 1;
      continue;
    }
    // Partial Fisher-Yates: the first `cap` slots end up a uniform sample
    // without replacement.
    Rng rng(derive_seed(params.rng_seed, key.packed()));
    std::vector<std::size_t> pool = members;
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
      keep[pool[i]] = 1;
    }
  }

  PointCloud out(cloud.source_tag());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (keep[i]) out.push_back(cloud[i]);
  return out;
}

PointCloud chroma_filter(const PointCloud& cloud, const OutlierParams& outlier, const ChromaParams& chroma,
                         ChromaStats* stats) {
  PointCloud cleaned = remove_outliers(cloud, outlier);
  PointCloud out = subsample_by_color(cleaned, chroma);
  if (stats) {
    stats->input_points = cloud.size();
    stats->after_outliers = cleaned.size();
    stats->output_points = out.size();
    stats->buckets = bucket_by_color(cleaned, chroma.quantization).size();
  }
  return out;
}

}  // namespace splatprep

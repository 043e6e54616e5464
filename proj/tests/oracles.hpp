// Brute-force reference implementations. These are written directly from
// the definitions, without the indexing, separability or early exits used
// by the library, and are slow on purpose.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "splatprep/features.hpp"
#include "splatprep/image.hpp"
#include "splatprep/point_cloud.hpp"
#include "splatprep/spatial_index.hpp"

namespace oracle {

using splatprep::GrayImage;
using splatprep::Image;
using splatprep::Neighbor;
using splatprep::PointCloud;
using splatprep::Vec3;

inline std::vector<Neighbor> knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back(splatprep::squared_distance(pts[i], q), i);
  std::sort(all.begin(), all.end());
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back({all[i].second, std::sqrt(all[i].first)});
  return out;
}

/// Mean distance to the k nearest other points (self excluded by index).
inline std::vector<double> mean_knn_distances(const std::vector<Vec3>& pts, std::size_t k) {
  std::vector<double> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) all.emplace_back(splatprep::squared_distance(pts[i], pts[j]), j);
    std::sort(all.begin(), all.end());
    double s = 0.0;
    for (std::size_t n = 0; n < k; ++n) s += std::sqrt(all[n].first);
    d[i] = s / static_cast<double>(k);
  }
  return d;
}

/// keep[i] iff d_i <= mean + alpha * population stddev.
inline std::vector<bool> outlier_keep(const std::vector<Vec3>& pts, std::size_t k, double alpha) {
  const auto d = mean_knn_distances(pts, k);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.size());
  const double thr = mean + alpha * std::sqrt(var);
  std::vector<bool> keep(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) keep[i] = d[i] <= thr;
  return keep;
}

/// Every circular arc of length >= n whose pixels all pass one side of the
/// test; score is the best arc sum of |I(p) - I(c)|.
inline float segment_score(const GrayImage& img, int x, int y, int t, int n) {
  const int c = img.at(x, y);
  int v[16];
  for (int i = 0; i < 16; ++i) v[i] = img.at(x + splatprep::kFastCircle[i][0], y + splatprep::kFastCircle[i][1]);
  int best = 0;
  for (int sign : {1, -1})
    for (int start = 0; start < 16; ++start)
      for (int len = n; len <= 16; ++len) {
        bool ok = true;
        int sum = 0;
        for (int s = 0; s < len; ++s) {
          const int d = v[(start + s) % 16] - c;
          if (!(sign * d > t)) ok = false;
          sum += std::abs(d);
        }
        if (ok) best = std::max(best, sum);
      }
  return static_cast<float>(best);
}

inline double orientation(const GrayImage& img, int cx, int cy, int r) {
  double m01 = 0.0, m10 = 0.0;
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) {
        m10 += dx * img.at(x, y);
        m01 += dy * img.at(x, y);
      }
    }
  return std::atan2(m01, m10);
}

/// Index of the nearest train descriptor (lowest index on ties).
inline std::size_t hamming_nearest(const splatprep::BinaryDescriptor& q,
                                   const std::vector<splatprep::BinaryDescriptor>& train, int* distance = nullptr) {
  std::size_t best = 0;
  int bd = 1 << 30;
  for (std::size_t j = 0; j < train.size(); ++j) {
    int d = 0;
    for (int b = 0; b < 256; ++b) d += q.bit(b) != train[j].bit(b);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  if (distance) *distance = bd;
  return best;
}

/// Exhaustive threshold sweep over the raw pixel list; midpoint of the first
/// and last maximiser.
inline int otsu(const GrayImage& img) {
  const auto px = img.pixels();
  const double n = static_cast<double>(px.size());
  double best = -1.0;
  int first = 0, last = 0;
  for (int t = 0; t < 256; ++t) {
    double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (std::uint8_t p : px) {
      if (p <= t) {
        n0 += 1;
        s0 += p;
      } else {
        n1 += 1;
        s1 += p;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    // Empty bins between t-1 and t leave every sum unchanged, so their
    // variances tie exactly.
    const double m0 = s0 / n0, m1 = s1 / n1;
    const double between = (n0 / n) * (n1 / n) * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      first = last = t;
    } else if (between == best) {
      last = t;
    }
  }
  if (best < 0) return px.empty() ? 0 : px[0];
  return (first + last) / 2;
}

inline double mse(const Image& a, const Image& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) {
        const double d = double(a.at(x, y, c)) - double(b.at(x, y, c));
        s += d * d;
      }
  return s / (double(a.width()) * a.height() * a.channels());
}

inline double psnr(const Image& a, const Image& b) { return 10.0 * std::log10(255.0 * 255.0 / mse(a, b)); }

inline double l1(const Image& a, const Image& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) s += std::abs(a.at(x, y, c) / 255.0 - b.at(x, y, c) / 255.0);
  return s / (double(a.width()) * a.height() * a.channels());
}

/// 2-D Gaussian-weighted statistics at every full window position.
inline double ssim(const Image& a, const Image& b, int win = 11, double sigma = 1.5) {
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  const int r = win / 2;
  std::vector<double> w(static_cast<std::size_t>(win * win));
  double wsum = 0.0;
  for (int j = 0; j < win; ++j)
    for (int i = 0; i < win; ++i) {
      const double dx = i - r, dy = j - r;
      w[j * win + i] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      wsum += w[j * win + i];
    }
  for (double& v : w) v /= wsum;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= a.height(); ++y0)
      for (int x0 = 0; x0 + win <= a.width(); ++x0) {
        double mx = 0, my = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            mx += w[j * win + i] * a.at(x0 + i, y0 + j, c);
            my += w[j * win + i] * b.at(x0 + i, y0 + j, c);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            const double dx = a.at(x0 + i, y0 + j, c) - mx, dy = b.at(x0 + i, y0 + j, c) - my;
            vx += w[j * win + i] * dx * dx;
            vy += w[j * win + i] * dy * dy;
            cxy += w[j * win + i] * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    total += acc / count;
  }
  return total / a.channels();
}

}  // namespace oracle

namespace testutil {

inline splatprep::PointCloud random_cloud(std::mt19937_64& g, std::size_t n, std::size_t colors, double extent = 10.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<splatprep::Rgb> palette(std::max<std::size_t>(colors, 1));
  std::uniform_int_distribution<int> c(0, 255);
  for (auto& p : palette) p = {std::uint8_t(c(g)), std::uint8_t(c(g)), std::uint8_t(c(g))};
  std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
  splatprep::PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cloud.push_back({{u(g), u(g), u(g)}, palette[pick(g)]});
  return cloud;
}

inline std::vector<splatprep::Vec3> positions(const splatprep::PointCloud& c) {
  std::vector<splatprep::Vec3> out;
  for (const auto& p : c) out.push_back(p.position);
  return out;
}

inline splatprep::Image random_image(std::mt19937_64& g, int w, int h, int channels) {
  splatprep::Image img(w, h, channels);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(u(g));
  return img;
}

inline splatprep::GrayImage random_gray(std::mt19937_64& g, int w, int h) {
  splatprep::GrayImage img(w, h);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(u(g));
  return img;
}

/// Blocky random texture: random rectangles on a dark background.
inline splatprep::GrayImage blocks(std::mt19937_64& g, int w, int h, int count) {
  splatprep::GrayImage img(w, h, 20);
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1), sz(4, 14), val(120, 255);
  for (int i = 0; i < count; ++i) {
    const int x0 = px(g), y0 = py(g), bw = sz(g), bh = sz(g);
    const auto v = static_cast<std::uint8_t>(val(g));
    for (int y = y0; y < std::min(h, y0 + bh); ++y)
      for (int x = x0; x < std::min(w, x0 + bw); ++x) img.at(x, y) = v;
  }
  return img;
}

/// Frames of a camera panning right over an evenly textured strip (one
/// jittered bright 6 px square per 10 px cell): frame k shows columns
/// [k * step, k * step + width) of the strip.
inline std::vector<splatprep::GrayImage> panning_sequence(std::mt19937_64& g, int width, int height, int step,
                                                          std::size_t frames) {
  const int strip = width + step * static_cast<int>(frames - 1) + 20;
  splatprep::GrayImage world(strip, height, 20);
  std::uniform_int_distribution<int> jitter(0, 4), val(140, 255);
  for (int cy = 0; cy + 10 <= height; cy += 10)
    for (int cx = 0; cx + 10 <= strip; cx += 10) {
      const int x0 = cx + jitter(g), y0 = cy + jitter(g);
      const auto v = static_cast<std::uint8_t>(val(g));
      for (int y = y0; y < y0 + 6; ++y)
        for (int x = x0; x < x0 + 6; ++x) world.at(x, y) = v;
    }
  std::vector<splatprep::GrayImage> out;
  for (std::size_t k = 0; k < frames; ++k) {
    splatprep::GrayImage f(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) f.at(x, y) = world.at(x + static_cast<int>(k) * step, y);
    out.push_back(std::move(f));
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("splatprep_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testutil

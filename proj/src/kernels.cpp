#include "splatprep/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace splatprep::kernels {
namespace {

// Each driver runs the same per-item body; Parallel only toggles the OpenMP
// team, so serial:: and omp:: differ in scheduling and nothing else.

template <bool Parallel>
std::vector<double> mean_knn_distances_impl(const SpatialIndex& index, std::size_t k) {
  const auto n = static_cast<std::ptrdiff_t>(index.size());
  std::vector<double> out(index.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 256) if (Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto self = static_cast<std::size_t>(i);
    auto nbrs = index.knn(index.position(self), k + 1);
    auto it = std::find_if(nbrs.begin(), nbrs.end(), [&](const Neighbor& nb) { return nb.index == self; });
    if (it != nbrs.end()) nbrs.erase(it);
    else nbrs.pop_back();
    const std::size_t used = std::min(k, nbrs.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < used; ++j) sum += nbrs[j].distance;
    out[self] = used ? sum / static_cast<double>(used) : 0.0;
  }
  return out;
}

template <bool Parallel>
std::vector<Correspondence> nearest_within_impl(std::span<const Vec3> src, const SpatialIndex& dst, double cap) {
  const auto n = static_cast<std::ptrdiff_t>(src.size());
  std::vector<Neighbor> found(src.size());
  std::vector<std::uint8_t> hit(src.size(), 0);
#pragma omp parallel for schedule(dynamic, 512) if (Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) hit[i] = dst.nearest_within(src[i], cap, found[i]) ? 1 : 0;
  std::vector<Correspondence> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    if (hit[i]) out.push_back({i, found[i].index, found[i].distance});
  return out;
}

template <bool Parallel>
std::vector<HammingNearest> hamming_nearest_impl(std::span<const BinaryDescriptor> queries,
                                                 std::span<const BinaryDescriptor> train) {
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  std::vector<HammingNearest> out(queries.size());
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    HammingNearest h;
    for (std::size_t j = 0; j < train.size(); ++j) {
      const int d = hamming(queries[i], train[j]);
      if (d < h.best_distance) {
        h.second_distance = h.best_distance;
        h.best_distance = d;
        h.best = j;
      } else if (d < h.second_distance) {
        h.second_distance = d;
      }
    }
    out[i] = h;
  }
  return out;
}

template <bool Parallel>
std::vector<float> segment_test_scores_impl(const GrayImage& img, int threshold, int n_contig, int border) {
  const int w = img.width();
  const int h = img.height();
  std::vector<float> out(static_cast<std::size_t>(w) * h, 0.0f);
  border = std::max(border, 3);
#pragma omp parallel for schedule(dynamic, 8) if (Parallel)
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x)
      out[static_cast<std::size_t>(y) * w + x] = segment_test_score(img, x, y, threshold, n_contig);
  return out;
}

// Bilinear sample at a location already known to lie in [0, w-1] x [0, h-1].
inline double bilinear(const std::uint8_t* data, int w, int h, int stride, int c, double x, double y) {
  const int x0 = std::min(static_cast<int>(x), w - 1);
  const int y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xx, int yy) { return static_cast<double>(data[(static_cast<std::size_t>(yy) * w + xx) * stride + c]); };
  const double top = px(x0, y0) + fx * (px(x1, y0) - px(x0, y0));
  const double bot = px(x0, y1) + fx * (px(x1, y1) - px(x0, y1));
  return top + fy * (bot - top);
}

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

template <bool Parallel>
WarpResult warp_bilinear_impl(const GrayImage& src, const Mat3& m, int width, int height) {
  WarpResult out{GrayImage(width, height), BitMask(width, height)};
  const int sw = src.width();
  const int sh = src.height();
  const std::uint8_t* data = src.pixels().data();
#pragma omp parallel for schedule(static) if (Parallel)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double hx = m(0, 0) * x + m(0, 1) * y + m(0, 2);
      const double hy = m(1, 0) * x + m(1, 1) * y + m(1, 2);
      const double hw = m(2, 0) * x + m(2, 1) * y + m(2, 2);
      if (!(hw > 0.0)) continue;
      const double sx = hx / hw;
      const double sy = hy / hw;
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= sw - 1 && sy <= sh - 1)) continue;
      out.image.at(x, y) = to_u8(bilinear(data, sw, sh, 1, 0, sx, sy));
      out.valid.set(x, y, true);
    }
  }
  return out;
}

template <bool Parallel>
Image undistort_remap_impl(const DistortionModel& model, const Image& src) {
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  Image out(w, h, ch);
  const std::uint8_t* data = src.data().data();
#pragma omp parallel for schedule(dynamic, 4) if (Parallel)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto d = distort_point(model, Vec2(x, y));
      if (!d) continue;
      const double sx = d->x();
      const double sy = d->y();
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1)) continue;
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = to_u8(bilinear(data, w, h, ch, c, sx, sy));
    }
  }
  return out;
}

template <bool Parallel>
double ssim_mean_impl(const Image& xi, const Image& yi, int channel, const SsimWindow& win) {
  const int w = xi.width();
  const int h = xi.height();
  const int ch = xi.channels();
  const int s = win.size;
  const int ow = w - s + 1;
  const int oh = h - s + 1;
  const std::size_t hsize = static_cast<std::size_t>(ow) * h;
  // Horizontal pass of x, y, x^2, y^2, xy.
  std::vector<double> hx(hsize), hy(hsize), hxx(hsize), hyy(hsize), hxy(hsize);
  const std::uint8_t* xd = xi.data().data();
  const std::uint8_t* yd = yi.data().data();
#pragma omp parallel for schedule(static) if (Parallel)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int j = 0; j < s; ++j) {
        const std::size_t idx = (static_cast<std::size_t>(r) * w + c + j) * ch + channel;
        const double a = xd[idx];
        const double b = yd[idx];
        const double wj = win.weights[j];
        sx += wj * a;
        sy += wj * b;
        sxx += wj * a * a;
        syy += wj * b * b;
        sxy += wj * a * b;
      }
      const std::size_t o = static_cast<std::size_t>(r) * ow + c;
      hx[o] = sx;
      hy[o] = sy;
      hxx[o] = sxx;
      hyy[o] = syy;
      hxy[o] = sxy;
    }
  }
  std::vector<double> row_sums(oh, 0.0);
#pragma omp parallel for schedule(static) if (Parallel)
  for (int r = 0; r < oh; ++r) {
    double acc = 0.0;
    for (int c = 0; c < ow; ++c) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < s; ++i) {
        const std::size_t o = static_cast<std::size_t>(r + i) * ow + c;
        const double wi = win.weights[i];
        mx += wi * hx[o];
        my += wi * hy[o];
        mxx += wi * hxx[o];
        myy += wi * hyy[o];
        mxy += wi * hxy[o];
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cxy = mxy - mx * my;
      acc += ((2 * mx * my + win.c1) * (2 * cxy + win.c2)) / ((mx * mx + my * my + win.c1) * (vx + vy + win.c2));
    }
    row_sums[r] = acc;
  }
  double total = 0.0;
  for (double v : row_sums) total += v;
  return total / (static_cast<double>(ow) * oh);
}

}  // namespace

#define SPLATPREP_DEFINE_KERNELS(NS, PARALLEL)                                                          \
  namespace NS {                                                                                        \
  std::vector<double> mean_knn_distances(const SpatialIndex& index, std::size_t k) {                   \
    return mean_knn_distances_impl<PARALLEL>(index, k);                                                 \
  }                                                                                                     \
  std::vector<Correspondence> nearest_within(std::span<const Vec3> src, const SpatialIndex& dst,       \
                                             double cap) {                                              \
    return nearest_within_impl<PARALLEL>(src, dst, cap);                                                \
  }                                                                                                     \
  std::vector<HammingNearest> hamming_nearest(std::span<const BinaryDescriptor> queries,               \
                                              std::span<const BinaryDescriptor> train) {                \
    return hamming_nearest_impl<PARALLEL>(queries, train);                                              \
  }                                                                                                     \
  std::vector<float> segment_test_scores(const GrayImage& img, int threshold, int n_contig, int border) { \
    return segment_test_scores_impl<PARALLEL>(img, threshold, n_contig, border);                        \
  }                                                                                                     \
  WarpResult warp_bilinear(const GrayImage& src, const Mat3& inverse_map, int width, int height) {     \
    return warp_bilinear_impl<PARALLEL>(src, inverse_map, width, height);                               \
  }                                                                                                     \
  Image undistort_remap(const DistortionModel& model, const Image& src) {                               \
    return undistort_remap_impl<PARALLEL>(model, src);                                                  \
  }                                                                                                     \
  double ssim_mean(const Image& x, const Image& y, int channel, const SsimWindow& window) {             \
    return ssim_mean_impl<PARALLEL>(x, y, channel, window);                                             \
  }                                                                                                     \
  }

SPLATPREP_DEFINE_KERNELS(serial, false)
SPLATPREP_DEFINE_KERNELS(omp, true)

#undef SPLATPREP_DEFINE_KERNELS

}  // namespace splatprep::kernels

#include "splatprep/homography.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "splatprep/error.hpp"
#include "splatprep/kernels.hpp"
#include "splatprep/rng.hpp"

namespace splatprep {

Homography::Homography(const Mat3& m) {
  if (!m.allFinite() || m(2, 2) == 0.0) throw UsageError("homography needs finite entries and h33 != 0");
  m_ = m / m(2, 2);
  if (!(std::abs(m_.determinant()) > 1e-12)) throw UsageError("homography is not invertible");
}

Homography Homography::translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Vec2 Homography::apply(const Vec2& p) const {
  const Eigen::Vector3d q = m_ * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

double reprojection_error(const Homography& h, const PointPair& pair) { return (h.apply(pair.from) - pair.to).norm(); }

namespace {

// Isotropic normalisation: centroid to the origin, mean distance sqrt(2).
Mat3 normalizer(std::span<const PointPair> pairs, bool use_to) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pairs) c += use_to ? p.to : p.from;
  c /= static_cast<double>(pairs.size());
  double mean = 0.0;
  for (const auto& p : pairs) mean += ((use_to ? p.to : p.from) - c).norm();
  mean /= static_cast<double>(pairs.size());
  if (!(mean > 0.0) || !std::isfinite(mean)) throw DegenerateError("homography points are coincident");
  const double s = std::sqrt(2.0) / mean;
  Mat3 t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 u = b - a;
  const Vec2 v = c - a;
  const double cross = u.x() * v.y() - u.y() * v.x();
  return std::abs(cross) <= 1e-6 * u.norm() * v.norm();
}

bool degenerate_sample(std::span<const PointPair> pairs, const std::size_t idx[4]) {
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (int c = b + 1; c < 4; ++c) {
        const auto& pa = pairs[idx[a]];
        const auto& pb = pairs[idx[b]];
        const auto& pc = pairs[idx[c]];
        if (collinear(pa.from, pb.from, pc.from) || collinear(pa.to, pb.to, pc.to)) return true;
      }
  return false;
}

struct Consensus {
  std::vector<std::size_t> inliers;
  double error = 0.0;
};

Consensus consensus(const Homography& h, std::span<const PointPair> pairs, double threshold) {
  Consensus c;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = reprojection_error(h, pairs[i]);
    if (e <= threshold) {
      c.inliers.push_back(i);
      c.error += e;
    }
  }
  return c;
}

bool better(const Consensus& a, const Consensus& b) {
  return a.inliers.size() > b.inliers.size() || (a.inliers.size() == b.inliers.size() && a.error < b.error);
}

}  // namespace

Homography fit_homography_dlt(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) throw DegenerateError("homography needs at least 4 correspondences");
  const Mat3 tf = normalizer(pairs, false);
  const Mat3 tt = normalizer(pairs, true);
  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d p = tf * Eigen::Vector3d(pairs[i].from.x(), pairs[i].from.y(), 1.0);
    const Eigen::Vector3d q = tt * Eigen::Vector3d(pairs[i].to.x(), pairs[i].to.y(), 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  // A second (near) null vector means the points do not pin down H.
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-9 * sv(0)) throw DegenerateError("correspondences do not determine a homography");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Mat3 m = tt.inverse() * hn * tf;
  try {
    return Homography(m);
  } catch (const UsageError&) {
    throw DegenerateError("correspondences do not determine an invertible homography");
  }
}

HomographyFit estimate_homography(std::span<const PointPair> pairs, const RansacParams& params) {
  if (pairs.size() < 4) throw EstimationError("homography needs at least 4 matches, got " + std::to_string(pairs.size()));
  if (params.iterations < 1 || !(params.inlier_threshold > 0.0)) throw UsageError("invalid RANSAC parameters");

  Rng rng(params.seed);
  std::optional<Homography> best_h;
  Consensus best;
  const std::uint64_t n = pairs.size();
  for (int it = 0; it < params.iterations; ++it) {
    std::size_t idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = static_cast<std::size_t>(uniform_below(rng, n));
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
    }
    if (degenerate_sample(pairs, idx)) continue;
    const PointPair sample[4] = {pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
    Homography h;
    try {
      h = fit_homography_dlt(sample);
    } catch (const DegenerateError&) {
      continue;
    }
    Consensus c = consensus(h, pairs, params.inlier_threshold);
    if (!best_h || better(c, best)) {
      best_h = h;
      best = std::move(c);
      if (best.inliers.size() == pairs.size()) break;
    }
  }
  if (!best_h || best.inliers.size() < 4) throw EstimationError("RANSAC found no non-degenerate model");

  // Least-squares refit on the consensus set until it stops changing.
  Homography h = *best_h;
  for (int round = 0; round < 10; ++round) {
    std::vector<PointPair> subset;
    subset.reserve(best.inliers.size());
    for (std::size_t i : best.inliers) subset.push_back(pairs[i]);
    Homography refit;
    try {
      refit = fit_homography_dlt(subset);
    } catch (const DegenerateError&) {
      break;
    }
    Consensus c = consensus(refit, pairs, params.inlier_threshold);
    if (c.inliers.size() < 4) break;
    const bool same = c.inliers == best.inliers;
    h = refit;
    best = std::move(c);
    if (same) break;
  }
  return {h, std::move(best.inliers)};
}

WarpResult warp(const GrayImage& src, const Homography& h, int width, int height) {
  if (width <= 0) width = src.width();
  if (height <= 0) height = src.height();
  return kernels::omp::warp_bilinear(src, h.inverse().matrix(), width, height);
}

}  // namespace splatprep

#include "splatprep/registration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <json.hpp>

#include "splatprep/error.hpp"
#include "splatprep/log.hpp"
#include "splatprep/rng.hpp"

namespace splatprep {
namespace {

struct Alignment {
  double scale;
  Mat3d rotation;
  Vec3 translation;
};

// Shared Umeyama core on already-paired points; with_scale = false gives the
// Kabsch solution.
template <class SrcAt, class DstAt>
Alignment align_pairs(std::size_t n, SrcAt src_at, DstAt dst_at, bool with_scale) {
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += src_at(i);
    mu_d += dst_at(i);
  }
  mu_s /= static_cast<double>(n);
  mu_d /= static_cast<double>(n);

  Mat3d cross = Mat3d::Zero();
  Mat3d src_cov = Mat3d::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = src_at(i) - mu_s;
    const Vec3 b = dst_at(i) - mu_d;
    cross += b * a.transpose();
    src_cov += a * a.transpose();
    src_var += a.squaredNorm();
  }
  cross /= static_cast<double>(n);
  src_var /= static_cast<double>(n);

  const Eigen::JacobiSVD<Mat3d> src_svd(src_cov);
  const Vec3 sv = src_svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) throw DegenerateError("source points are collinear or coincident");

  const Eigen::JacobiSVD<Mat3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (!(d(0) > 0.0) || d(1) <= 1e-12 * d(0)) throw DegenerateError("destination points are collinear or coincident");

  Mat3d s = Mat3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
  const Mat3d r = svd.matrixU() * s * svd.matrixV().transpose();
  const double scale = with_scale ? (d.asDiagonal() * s).trace() / src_var : 1.0;
  return {scale, r, mu_d - scale * (r * mu_s)};
}

std::vector<Vec3> positions_of(const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Point& p : cloud) out.push_back(p.position);
  return out;
}

double rms_of(std::span<const Correspondence> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : pairs) sum += c.distance * c.distance;
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

}  // namespace

SimilarityTransform estimate_similarity(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) throw UsageError("similarity estimation needs equally many source and target points");
  if (src.size() < 3) throw UsageError("similarity estimation needs at least 3 correspondences");
  const Alignment a = align_pairs(
      src.size(), [&](std::size_t i) { return src[i]; }, [&](std::size_t i) { return dst[i]; }, true);
  if (!(a.scale > 0.0)) throw DegenerateError("estimated scale is not positive");
  return {a.scale, a.rotation, a.translation};
}

CorrespondenceSet nearest_correspondences(std::span<const Vec3> src, const SpatialIndex& dst, double cap) {
  CorrespondenceSet out;
  if (src.empty() || dst.empty()) return out;
  out.pairs = kernels::omp::nearest_within(src, dst, cap);
  out.matched_fraction = static_cast<double>(out.pairs.size()) / static_cast<double>(src.size());
  return out;
}

CorrespondenceSet nearest_correspondences(const PointCloud& src, const SpatialIndex& dst, double cap) {
  const auto pos = positions_of(src);
  return nearest_correspondences(pos, dst, cap);
}

RigidTransform best_rigid(std::span<const Correspondence> pairs, std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (pairs.size() < 3) throw DegenerateError("rigid alignment needs at least 3 correspondences");
  const Alignment a = align_pairs(
      pairs.size(), [&](std::size_t i) { return src[pairs[i].src]; }, [&](std::size_t i) { return dst[pairs[i].dst]; },
      false);
  return {a.rotation, a.translation};
}

double alignment_error(const RigidTransform& t, std::span<const Correspondence> pairs, std::span<const Vec3> src,
                       std::span<const Vec3> dst) {
  double e = 0.0;
  for (const auto& c : pairs) e += (dst[c.dst] - t.apply(src[c.src])).squaredNorm();
  return e;
}

void validate(const IcpParams& p) {
  if (p.max_iterations < 1) throw UsageError("ICP max_iterations must be >= 1");
  if (!(p.phase1_fraction > 0.0 && p.phase1_fraction <= p.phase2_fraction && p.phase2_fraction <= 1.0))
    throw UsageError("ICP phase fractions must satisfy 0 < phase1 <= phase2 <= 1");
  if (!(p.phase1_cap_ratio > 0.0 && p.phase2_cap_ratio > 0.0)) throw UsageError("ICP cap ratios must be positive");
  if ((p.phase1_cap && !(*p.phase1_cap > 0.0)) || (p.phase2_cap && !(*p.phase2_cap > 0.0)))
    throw UsageError("ICP caps must be positive");
  if (!(p.epsilon >= 0.0)) throw UsageError("ICP epsilon must be >= 0");
  if (p.max_source_points < 3) throw UsageError("ICP max_source_points must be >= 3");
}

IcpResult icp(const PointCloud& src, const PointCloud& dst, const SimilarityTransform& init, const IcpParams& params) {
  validate(params);
  if (src.size() < 3 || dst.size() < 3) throw UsageError("ICP needs at least 3 points in each cloud");

  std::vector<Vec3> scaled;
  scaled.reserve(src.size());
  for (const Point& p : src) scaled.push_back(init.apply(p.position));
  const std::vector<Vec3> dst_pos = positions_of(dst);
  const SpatialIndex index(dst_pos);

  const double diag = dst.bbox_diagonal();
  const double caps[2] = {params.phase1_cap.value_or(params.phase1_cap_ratio * diag),
                          params.phase2_cap.value_or(params.phase2_cap_ratio * diag)};
  const double targets[2] = {params.phase1_fraction, params.phase2_fraction};

  IcpResult result;
  IcpReport& report = result.report;
  report.phase_caps[0] = caps[0];
  report.phase_caps[1] = caps[1];
  RigidTransform current;

  if (nearest_correspondences(scaled, index, caps[0]).pairs.empty())
    throw NoOverlapError("no source point lies within the ICP correspondence cap; improve the coarse alignment");

  const bool subsample = src.size() > params.max_source_points;
  std::vector<std::size_t> pool(src.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::vector<Vec3> moved;
  std::uint64_t draw = 0;

  for (int phase = 0; phase < 2; ++phase) {
    for (int it = 0; it < params.max_iterations; ++it) {
      moved.clear();
      if (subsample) {
        Rng rng(derive_seed(params.seed, draw++));
        for (std::size_t i = 0; i < params.max_source_points; ++i)
          std::swap(pool[i], pool[i + uniform_below(rng, pool.size() - i)]);
        std::vector<std::size_t> picked(pool.begin(), pool.begin() + params.max_source_points);
        std::sort(picked.begin(), picked.end());
        for (std::size_t i : picked) moved.push_back(current.apply(scaled[i]));
      } else {
        for (const Vec3& p : scaled) moved.push_back(current.apply(p));
      }

      const CorrespondenceSet corr = nearest_correspondences(moved, index, caps[phase]);
      if (corr.matched_fraction >= targets[phase]) report.phase_target_reached[phase] = true;
      // Phase 1 only has to bring the clouds within reach of phase 2.
      if (phase == 0 && report.phase_target_reached[0]) break;
      if (corr.pairs.size() < 3) break;

      const double rms_before = rms_of(corr.pairs);
      RigidTransform delta;
      try {
        delta = best_rigid(corr.pairs, moved, dst_pos);
      } catch (const DegenerateError&) {
        break;
      }
      const double rms_after =
          std::sqrt(alignment_error(delta, corr.pairs, moved, dst_pos) / static_cast<double>(corr.pairs.size()));
      if (rms_after > rms_before) break;  // numerical noise only: Procrustes cannot increase it

      current = delta * current;
      ++report.phase_iterations[phase];
      report.history.push_back({phase + 1, corr.pairs.size(), corr.matched_fraction, rms_before, rms_after, current});
      if (rms_before - rms_after <= params.epsilon * rms_before) break;
    }
  }

  std::vector<Vec3> final_pos;
  final_pos.reserve(scaled.size());
  for (const Vec3& p : scaled) final_pos.push_back(current.apply(p));
  const CorrespondenceSet final_corr = nearest_correspondences(final_pos, index, caps[1]);
  report.final_rms = rms_of(final_corr.pairs);
  report.final_matched_fraction = final_corr.matched_fraction;
  if (report.final_matched_fraction >= targets[1]) report.phase_target_reached[1] = true;
  if (!report.phase_target_reached[1])
    log().warn("ICP finished with matched fraction {:.4f} below the phase-2 target {:.2f}",
               report.final_matched_fraction, targets[1]);

  result.total = current;
  result.full = SimilarityTransform::from_rigid(current) * init;
  return result;
}

FuseSummary fuse(const PointCloud& sfm, const PointCloud& lidar_aligned, const std::filesystem::path& out,
                 const PlyWriteOptions& options) {
  PointCloud fused(SourceTag::fused);
  fused.reserve(sfm.size() + lidar_aligned.size());
  for (const Point& p : sfm) fused.push_back(p);
  for (const Point& p : lidar_aligned) fused.push_back(p);
  save_ply(fused, out, options);

  FuseSummary s{sfm.size(), lidar_aligned.size(), fused.size(), out};
  s.manifest = out;
  s.manifest += ".sources.json";
  nlohmann::json j;
  j["file"] = out.filename().string();
  j["vertex_count"] = fused.size();
  j["sources"] = nlohmann::json::array({
      {{"tag", "sfm"}, {"first", 0}, {"count", sfm.size()}},
      {{"tag", "lidar"}, {"first", sfm.size()}, {"count", lidar_aligned.size()}},
  });
  std::ofstream m(s.manifest);
  if (!m) throw IoError("cannot write '" + s.manifest.string() + "'");
  m << j.dump(2) << '\n';
  return s;
}

PickedPairs load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs file '" + path.string() + "'");
  PickedPairs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> v;
    for (std::string tok; ss >> tok;) {
      double x = 0.0;
      const char* first = tok.data() + (tok.starts_with('+') ? 1 : 0);
      auto [p, ec] = std::from_chars(first, tok.data() + tok.size(), x);
      if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(x))
        throw ParseError("bad number '" + tok + "' in pairs file", line_no);
      v.push_back(x);
    }
    if (v.empty()) continue;
    if (v.size() != 6) throw ParseError("expected six numbers (lidar xyz, sfm xyz)", line_no);
    out.lidar.emplace_back(v[0], v[1], v[2]);
    out.sfm.emplace_back(v[3], v[4], v[5]);
  }
  return out;
}

}  // namespace splatprep

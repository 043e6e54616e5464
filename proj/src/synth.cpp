#include "splatprep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "splatprep/error.hpp"
#include "splatprep/frame_sampler.hpp"
#include "splatprep/image_io.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/rng.hpp"
#include "splatprep/undistort.hpp"

namespace splatprep {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Rect {
  double x0, y0, x1, y1;
  Rgb color;
};

Rgb random_color(Rng& rng, int lo = 60) {
  const auto span = static_cast<std::uint64_t>(256 - lo);
  return {static_cast<std::uint8_t>(lo + uniform_below(rng, span)), static_cast<std::uint8_t>(lo + uniform_below(rng, span)),
          static_cast<std::uint8_t>(lo + uniform_below(rng, span))};
}

Image render_frame(const std::vector<Rect>& rects, double offset, int width, int height) {
  Image img(width, height, 3, 20);
  for (const Rect& r : rects) {
    if (r.x1 < offset || r.x0 > offset + width) continue;
    const int xa = std::max(0, static_cast<int>(std::ceil(r.x0 - offset - 0.5)));
    const int xb = std::min(width - 1, static_cast<int>(std::floor(r.x1 - offset - 0.5)));
    const int ya = std::max(0, static_cast<int>(std::ceil(r.y0 - 0.5)));
    const int yb = std::min(height - 1, static_cast<int>(std::floor(r.y1 - 0.5)));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x) {
        img.at(x, y, 0) = r.color.r;
        img.at(x, y, 1) = r.color.g;
        img.at(x, y, 2) = r.color.b;
      }
  }
  return img;
}

// Sample a point on floor (z = 0), back wall (y = kY) or side wall (x = 0)
// with probability proportional to area.
Vec3 plane_point(Rng& rng) {
  constexpr double a0 = ScenePlanes::kX * ScenePlanes::kY;
  constexpr double a1 = ScenePlanes::kX * ScenePlanes::kZ;
  constexpr double a2 = ScenePlanes::kY * ScenePlanes::kZ;
  const double u = uniform_unit(rng) * (a0 + a1 + a2);
  const double s = uniform_unit(rng), t = uniform_unit(rng);
  if (u < a0) return {s * ScenePlanes::kX, t * ScenePlanes::kY, 0.0};
  if (u < a0 + a1) return {s * ScenePlanes::kX, ScenePlanes::kY, t * ScenePlanes::kZ};
  return {0.0, s * ScenePlanes::kY, t * ScenePlanes::kZ};
}

// Colour is constant over 0.5 m patches.
Rgb patch_color(const Vec3& p, const std::vector<Rgb>& palette, std::uint64_t seed) {
  const auto cell = [](double v) { return static_cast<std::uint64_t>(std::max(0.0, std::floor(v / 0.5))); };
  const std::uint64_t key = cell(p.x()) * 73856093ULL ^ cell(p.y()) * 19349663ULL ^ cell(p.z()) * 83492791ULL;
  return palette[derive_seed(seed, key) % palette.size()];
}

Vec3 gaussian3(std::mt19937_64& g, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(g), y = n(g), z = n(g);
  return {x, y, z};
}

}  // namespace

double ScenePlanes::distance(const Vec3& p) {
  auto clamp = [](double v, double hi) { return std::clamp(v, 0.0, hi); };
  const Vec3 floor(clamp(p.x(), kX), clamp(p.y(), kY), 0.0);
  const Vec3 back(clamp(p.x(), kX), kY, clamp(p.z(), kZ));
  const Vec3 side(0.0, clamp(p.y(), kY), clamp(p.z(), kZ));
  return std::min({(p - floor).norm(), (p - back).norm(), (p - side).norm()});
}

json SynthTruth::to_json() const {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    r.push_back({lidar_to_sfm.rotation(i, 0), lidar_to_sfm.rotation(i, 1), lidar_to_sfm.rotation(i, 2)});
  return {{"frames", frames},
          {"expected_selected", expected_selected},
          {"lidar_points", lidar_points},
          {"injected_outliers", injected_outliers},
          {"sfm_points", sfm_points},
          {"lidar_to_sfm",
           {{"scale", lidar_to_sfm.scale},
            {"rotation", r},
            {"translation", {lidar_to_sfm.translation.x(), lidar_to_sfm.translation.y(), lidar_to_sfm.translation.z()}}}}};
}

SynthTruth generate_scene(const fs::path& dir, const SynthParams& p) {
  if (p.frames < 2 || p.width < 32 || p.height < 32 || !(p.step_px > 0) || p.palette == 0 || p.lidar_points == 0 ||
      p.sfm_points == 0)
    throw UsageError("synthetic scene parameters out of range");
  fs::create_directories(dir / "frames");
  Rng rng(derive_seed(p.seed, 1));

  // Image texture: one jittered 6 px square per 10 px cell on a dark
  // background, so content density is even across the strip.
  constexpr double cell = 10.0;
  const double strip = p.width + p.step_px * static_cast<double>(p.frames - 1) + 2 * cell;
  std::vector<Rect> rects;
  for (double cy = -cell; cy < p.height + cell; cy += cell)
    for (double cx = -cell; cx < strip; cx += cell) {
      const double w = 6, h = 6;
      const double x = cx + uniform_unit(rng) * (cell - w), y = cy + uniform_unit(rng) * (cell - h);
      rects.push_back({x, y, x + w, y + h, random_color(rng, 140)});
    }

  DistortionModel lens;
  if (p.distort) {
    lens = {0.8 * p.width, 0.8 * p.width, p.width / 2.0, p.height / 2.0, -0.06, 0.01, 0.0, 0.0005, -0.0004};
    std::ofstream f(dir / "intrinsics.txt");
    f.precision(17);
    f << "# synthetic lens\nfx " << lens.fx << "\nfy " << lens.fy << "\ncx " << lens.cx << "\ncy " << lens.cy << "\nk1 "
      << lens.k1 << "\nk2 " << lens.k2 << "\nk3 " << lens.k3 << "\np1 " << lens.p1 << "\np2 " << lens.p2 << "\n";
  }

  std::vector<GrayImage> gray(p.frames);
  {
    const auto n = static_cast<std::ptrdiff_t>(p.frames);
    std::vector<std::string> errors(p.frames);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        const Image frame = render_frame(rects, static_cast<double>(i) * p.step_px, p.width, p.height);
        gray[i] = to_gray(frame);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04td.png", i);
        save_image(p.distort ? distort_image(lens, frame) : frame, dir / "frames" / name);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw Error(e);
  }

  SynthTruth truth;
  truth.frames = p.frames;
  // Known motion: anchor pixel x sees the candidate at x - (j - a) * step.
  const FrameSelection expected = greedy_select(
      p.frames,
      [&](std::size_t a, std::size_t j) {
        PairOverlap r;
        r.anchor_to_candidate = Homography::translation(-(static_cast<double>(j) - static_cast<double>(a)) * p.step_px, 0.0);
        r.overlap = content_overlap(gray[a], gray[j], *r.anchor_to_candidate, BinarizeMode::otsu());
        if (!r.overlap) r.failure = "anchor content mask is empty";
        return r;
      },
      80.0);
  truth.expected_selected = expected.selected;

  // Point clouds.
  std::vector<Rgb> palette(p.palette);
  for (Rgb& c : palette) c = random_color(rng);
  const std::uint64_t color_seed = derive_seed(p.seed, 2);
  std::mt19937_64 g(derive_seed(p.seed, 3));

  PointCloud lidar(SourceTag::lidar);
  lidar.reserve(p.lidar_points + p.outliers);
  for (std::size_t i = 0; i < p.lidar_points; ++i) {
    const Vec3 s = plane_point(rng);
    lidar.push_back({s + gaussian3(g, p.noise), patch_color(s, palette, color_seed)});
  }
  for (std::size_t i = 0; i < p.outliers; ++i) {
    const Vec3 q(-3.0 + 12.0 * uniform_unit(rng), -3.0 + 10.0 * uniform_unit(rng), 4.0 + 6.0 * uniform_unit(rng));
    lidar.push_back({q, palette[uniform_below(rng, palette.size())]});
  }
  save_ply(lidar, dir / "lidar.ply", PlyFormat::binary_le);

  SimilarityTransform t;
  t.scale = 0.37;
  t.rotation = axis_angle(Vec3(0.3, -0.5, 0.8).normalized(), 0.6);
  t.translation = Vec3(1.2, -0.4, 2.0);
  truth.lidar_to_sfm = t;

  PointCloud sfm(SourceTag::sfm);
  sfm.reserve(p.sfm_points);
  for (std::size_t i = 0; i < p.sfm_points; ++i) {
    const Vec3 s = plane_point(rng);
    sfm.push_back({t.apply(s + gaussian3(g, p.noise)), patch_color(s, palette, color_seed)});
  }
  save_ply(sfm, dir / "sfm.ply", PlyFormat::binary_le);

  {
    std::ofstream f(dir / "pairs.txt");
    f.precision(10);
    f << "# lidar_x lidar_y lidar_z sfm_x sfm_y sfm_z\n";
    const Vec3 picks[] = {{0.5, 0.5, 0.0}, {5.5, 0.5, 0.0}, {5.5, 4.0, 2.5}, {0.0, 3.5, 2.5}, {3.0, 2.0, 0.0}, {0.0, 0.5, 1.0}};
    for (const Vec3& w : picks) {
      const Vec3 a = w + gaussian3(g, 0.01);
      const Vec3 b = t.apply(w + gaussian3(g, 0.01));
      f << a.x() << ' ' << a.y() << ' ' << a.z() << ' ' << b.x() << ' ' << b.y() << ' ' << b.z() << '\n';
    }
  }

  truth.lidar_points = lidar.size();
  truth.injected_outliers = p.outliers;
  truth.sfm_points = sfm.size();

  json cfg = {{"seed", 42},
              {"output", "out"},
              {"inputs", {{"lidar", "lidar.ply"}, {"frames", "frames"}, {"pairs", "pairs.txt"}, {"sfm", "sfm.ply"}}},
              {"frames", {{"overlap", 80.0}}},
              {"chroma", {{"max_points_per_color", 10}}}};
  if (p.distort) cfg["inputs"]["intrinsics"] = "intrinsics.txt";
  std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';
  std::ofstream(dir / "truth.json") << truth.to_json().dump(2) << '\n';
  return truth;
}

}  // namespace splatprep

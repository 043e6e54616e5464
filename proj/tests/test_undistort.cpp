#include <doctest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "splatprep/error.hpp"
#include "splatprep/undistort.hpp"

using namespace splatprep;

namespace {

DistortionModel lens(double k1, double k2 = 0, double k3 = 0, double p1 = 0, double p2 = 0) {
  return {300, 310, 160, 120, k1, k2, k3, p1, p2};
}

Image smooth_color(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(127 + 100 * std::sin(x * 0.09) * std::cos(y * 0.07));
      img.at(x, y, 1) = static_cast<std::uint8_t>(127 + 100 * std::cos(x * 0.05 + y * 0.04));
      img.at(x, y, 2) = static_cast<std::uint8_t>(127 + 90 * std::sin((x + 2 * y) * 0.03));
    }
  return img;
}

}  // namespace

TEST_SUITE("undistort") {
  TEST_CASE("closed-form radial correction") {
    const DistortionModel m{1, 1, 0, 0, 0.1, 0, 0, 0, 0};
    const Vec2 u = correct_normalized(m, Vec2(0.5, 0));
    CHECK(u.x() == doctest::Approx(0.5125).epsilon(1e-15));
    CHECK(u.y() == 0.0);
  }

  TEST_CASE("tangential terms follow the standard x and y equations") {
    const DistortionModel m{1, 1, 0, 0, 0, 0, 0, 0.01, 0.02};
    const double x = 0.3, y = -0.2, r2 = x * x + y * y;
    const Vec2 u = correct_normalized(m, Vec2(x, y));
    CHECK(u.x() == doctest::Approx(x + 2 * 0.01 * x * y + 0.02 * (r2 + 2 * x * x)));
    CHECK(u.y() == doctest::Approx(y + 0.01 * (r2 + 2 * y * y) + 2 * 0.02 * x * y));
  }

  TEST_CASE("identity model and the principal point are fixed exactly") {
    const DistortionModel id{300, 300, 100, 80};
    std::mt19937_64 g(41);
    std::uniform_real_distribution<double> u(0, 200);
    for (int i = 0; i < 100; ++i) {
      const Vec2 p(u(g), u(g));
      CHECK(undistort_point(id, p) == p);
      CHECK(*distort_point(id, p) == p);
    }
    const DistortionModel m = lens(-0.3, 0.1, 0.01, 0.002, -0.001);
    CHECK(undistort_point(m, Vec2(m.cx, m.cy)) == Vec2(m.cx, m.cy));
    CHECK(*distort_point(m, Vec2(m.cx, m.cy)) == Vec2(m.cx, m.cy));
    const Image img = smooth_color(64, 48);
    CHECK(undistort_image(id, img) == img);
  }

  TEST_CASE("inverse mapping reproduces the sampling grid") {
    for (const DistortionModel& m : {lens(-0.25, 0.05), lens(0.15, -0.02, 0.0, 0.001, 0.002)}) {
      for (int y = 0; y < 240; y += 7)
        for (int x = 0; x < 320; x += 7) {
          const Vec2 un((x - m.cx) / m.fx, (y - m.cy) / m.fy);
          const auto d = distort_normalized(m, un);
          REQUIRE(d.has_value());
          CHECK((correct_normalized(m, *d) - un).norm() <= 1e-6);
        }
    }
  }

  TEST_CASE("undistort then re-distort stays within two levels in the interior") {
    const DistortionModel m = lens(-0.12, 0.02, 0, 0.0005, -0.0004);
    const Image img = smooth_color(320, 240);
    const Image back = distort_image(m, undistort_image(m, img));
    int worst = 0;
    for (int y = 40; y < 200; ++y)
      for (int x = 50; x < 270; ++x)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(back.at(x, y, c) - img.at(x, y, c)));
    CHECK(worst <= 2);
  }

  TEST_CASE("a distorted straight line comes back straight") {
    for (double k1 : {-0.2, 0.15}) {
      const DistortionModel m = lens(k1, 0.01);
      // Bright band along the line y = 0.1 x + 25 in undistorted space.
      Image line(320, 240, 1, 0);
      for (int y = 0; y < 240; ++y)
        for (int x = 0; x < 320; ++x) {
          const double dist = std::abs(0.1 * x - y + 25) / std::sqrt(1 + 0.1 * 0.1);
          line.at(x, y) = static_cast<std::uint8_t>(std::clamp(255.0 * (2.5 - dist) / 2.5, 0.0, 255.0));
        }
      const Image distorted = distort_image(m, line);
      const Image fixed = undistort_image(m, distorted);
      // Sub-pixel centroid per column, then a least-squares line fit.
      std::vector<Vec2> centres;
      for (int x = 60; x < 260; ++x) {
        double s = 0, sy = 0;
        for (int y = 0; y < 240; ++y) {
          s += fixed.at(x, y);
          sy += y * double(fixed.at(x, y));
        }
        if (s > 500) centres.emplace_back(x, sy / s);
      }
      REQUIRE(centres.size() > 150);
      double mx = 0, my = 0;
      for (const auto& c : centres) {
        mx += c.x();
        my += c.y();
      }
      mx /= centres.size();
      my /= centres.size();
      double sxx = 0, sxy = 0;
      for (const auto& c : centres) {
        sxx += (c.x() - mx) * (c.x() - mx);
        sxy += (c.x() - mx) * (c.y() - my);
      }
      const double slope = sxy / sxx;
      double worst = 0;
      for (const auto& c : centres) worst = std::max(worst, std::abs(c.y() - (my + slope * (c.x() - mx))));
      CHECK(worst < 0.5);

      // The distorted copy really is curved.
      std::vector<Vec2> bent;
      double worst_bent = 0;
      for (int x = 60; x < 260; x += 20) {
        double s = 0, sy = 0;
        for (int y = 0; y < 240; ++y) {
          s += distorted.at(x, y);
          sy += y * double(distorted.at(x, y));
        }
        if (s > 500) bent.emplace_back(x, sy / s);
      }
      REQUIRE(bent.size() >= 3);
      const Vec2 a = bent.front(), b = bent.back();
      for (const auto& c : bent) {
        const double t = (c.x() - a.x()) / (b.x() - a.x());
        worst_bent = std::max(worst_bent, std::abs(c.y() - (a.y() + t * (b.y() - a.y()))));
      }
      CHECK(worst_bent > 1.0);
    }
  }

  TEST_CASE("gray and colour paths agree") {
    const DistortionModel m = lens(-0.1);
    const Image img = smooth_color(120, 90);
    const GrayImage g = to_gray(img);
    CHECK(undistort_image(m, g) == to_gray(undistort_image(m, to_image(g))));
  }

  TEST_CASE("intrinsics files") {
    testutil::TempDir dir("intr");
    std::ofstream(dir / "kv.txt") << "# cam\nfx 500\nfy: 510\ncx=320\ncy 240\nk1 -0.1\nk2 0.01\nk3 0\np1 0.001\np2 -0.002\n";
    const DistortionModel a = load_intrinsics(dir / "kv.txt");
    CHECK(a.fx == 500);
    CHECK(a.fy == 510);
    CHECK(a.cx == 320);
    CHECK(a.k1 == -0.1);
    CHECK(a.p2 == -0.002);
    std::ofstream(dir / "pos.txt") << "500 510 320 240 -0.1 0.01 0 0.001 -0.002\n";
    const DistortionModel b = load_intrinsics(dir / "pos.txt");
    CHECK(b.fy == 510);
    CHECK(b.p1 == 0.001);
    std::ofstream(dir / "bad.txt") << "fx 500\nfy 0\ncx 1\ncy 1\n";
    CHECK_THROWS_AS(load_intrinsics(dir / "bad.txt"), Error);
    std::ofstream(dir / "junk.txt") << "fx five\n";
    CHECK_THROWS_AS(load_intrinsics(dir / "junk.txt"), ParseError);
    CHECK_THROWS_AS(load_intrinsics(dir / "none.txt"), IoError);
  }
}

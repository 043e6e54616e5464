#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "splatprep/error.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/spatial_index.hpp"

using namespace splatprep;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_SUITE("cloud_model") {
  TEST_CASE("ascii ply with three coloured vertices") {
    testutil::TempDir dir("ply");
    write_file(dir / "a.ply",
               "ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\n"
               "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
               "0 0 0 255 0 0\n1.5 2 -3 0 255 0\n-1 -2 4.25 1 2 3\n");
    const PointCloud c = load_ply(dir / "a.ply");
    REQUIRE(c.size() == 3);
    CHECK(c[1].position == Vec3(1.5, 2, -3));
    CHECK(c[0].color == Rgb{255, 0, 0});
    CHECK(c[2].color == Rgb{1, 2, 3});
  }

  TEST_CASE("r/g/b names, extra properties, faces and normals are tolerated") {
    testutil::TempDir dir("ply");
    write_file(dir / "b.ply",
               "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\n"
               "property float nx\nproperty float ny\nproperty float nz\nproperty uchar r\nproperty uchar g\n"
               "property uchar b\nproperty float intensity\nelement face 1\nproperty list uchar int vertex_indices\n"
               "end_header\n1 2 3 0 0 1 10 20 30 0.5\n4 5 6 0 1 0 40 50 60 0.25\n3 0 1 1\n");
    const PointCloud c = load_ply(dir / "b.ply");
    REQUIRE(c.size() == 2);
    CHECK(c[1].position == Vec3(4, 5, 6));
    CHECK(c[1].color == Rgb{40, 50, 60});
  }

  TEST_CASE("header and body errors") {
    testutil::TempDir dir("ply");
    write_file(dir / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nbogus line\nend_header\n0\n");
    CHECK_THROWS_AS(load_ply(dir / "bad.ply"), ParseError);
    write_file(dir / "noxyz.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n");
    CHECK_THROWS_AS(load_ply(dir / "noxyz.ply"), ParseError);
    write_file(dir / "short.ply",
               "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
               "end_header\n0 0 0\n1 1 1\n");
    CHECK_THROWS_AS(load_ply(dir / "short.ply"), TruncationError);
    write_file(dir / "nan.ply",
               "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
               "end_header\nnan 0 0\n");
    CHECK_THROWS_AS(load_ply(dir / "nan.ply"), DataError);
    CHECK_THROWS_AS(load_ply(dir / "missing.ply"), IoError);

    PointCloud c;
    c.push_back({{1, 2, 3}, {4, 5, 6}});
    c.push_back({{7, 8, 9}, {4, 5, 6}});
    save_ply(c, dir / "ok.ply");
    std::string bytes = read_file(dir / "ok.ply");
    write_file(dir / "trunc.ply", bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(load_ply(dir / "trunc.ply"), TruncationError);
  }

  TEST_CASE("header echoes the vertex count") {
    testutil::TempDir dir("ply");
    PointCloud c;
    for (int i = 0; i < 3; ++i) c.push_back({{double(i), 0, 0}, {}});
    save_ply(c, dir / "c.ply", PlyFormat::ascii);
    CHECK(read_file(dir / "c.ply").find("element vertex 3\n") != std::string::npos);
    save_ply(c, dir / "d.ply");
    CHECK(read_file(dir / "d.ply").find("element vertex 3\n") != std::string::npos);
    CHECK_THROWS_AS(save_ply(PointCloud{}, dir / "e.ply"), UsageError);
  }

  TEST_CASE("binary round trip is exact and loads are repeatable") {
    testutil::TempDir dir("ply");
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 20; ++trial) {
      const PointCloud c = testutil::random_cloud(g, 1 + g() % 500, 1 + g() % 50, 1e3);
      save_ply(c, dir / "r.ply");
      const PointCloud back = load_ply(dir / "r.ply");
      CHECK(back == c);
      CHECK(load_ply(dir / "r.ply") == back);
    }
  }

  TEST_CASE("ascii with nine significant digits keeps 1e-7 relative accuracy") {
    testutil::TempDir dir("ply");
    std::mt19937_64 g(12);
    const PointCloud c = testutil::random_cloud(g, 300, 10, 1e4);
    save_ply(c, dir / "a.ply", PlyFormat::ascii);
    const PointCloud back = load_ply(dir / "a.ply");
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(back[i].color == c[i].color);
      for (int a = 0; a < 3; ++a)
        CHECK(std::abs(back[i].position[a] - c[i].position[a]) <= 1e-7 * std::abs(c[i].position[a]) + 1e-300);
    }
  }

  TEST_CASE("float32 output and zero normals reload") {
    testutil::TempDir dir("ply");
    PointCloud c;
    c.push_back({{0.5, 0.25, 2}, {9, 8, 7}});
    PlyWriteOptions o;
    o.precision = PlyPrecision::float32;
    o.zero_normals = true;
    save_ply(c, dir / "f.ply", o);
    CHECK(read_file(dir / "f.ply").find("property float nx") != std::string::npos);
    CHECK(load_ply(dir / "f.ply") == c);
  }

  TEST_CASE("source tag survives a round trip through the header comment") {
    testutil::TempDir dir("ply");
    PointCloud c(SourceTag::fused);
    c.push_back({{1, 1, 1}, {}});
    save_ply(c, dir / "t.ply");
    CHECK(read_file(dir / "t.ply").find("comment splatprep source fused") != std::string::npos);
  }

  TEST_CASE("knn basics") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
    SpatialIndex idx(pts);
    auto r = idx.knn({1, 0, 0}, 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].index == 1);
    CHECK(r[0].distance == 0.0);
    CHECK(idx.knn({5, 5, 5}, 10).size() == 4);
    CHECK_THROWS_AS(idx.knn({0, 0, 0}, 0), UsageError);
    CHECK_THROWS_AS(SpatialIndex(std::vector<Vec3>{}).knn({0, 0, 0}, 1), UsageError);
  }

  TEST_CASE("knn equals brute force, ties by lower index") {
    std::mt19937_64 g(13);
    for (int trial = 0; trial < 6; ++trial) {
      const std::size_t n = trial < 3 ? 1000 : 5000;
      std::vector<Vec3> pts;
      std::uniform_int_distribution<int> grid(0, 6);
      std::uniform_real_distribution<double> u(-1, 1);
      for (std::size_t i = 0; i < n; ++i)
        pts.push_back(trial % 2 ? Vec3(grid(g), grid(g), grid(g)) : Vec3(u(g), u(g), u(g)));
      SpatialIndex idx(pts);
      for (int q = 0; q < 50; ++q) {
        const Vec3 query = q % 5 == 0 ? pts[g() % n] : Vec3(u(g) * 4, u(g) * 4, u(g) * 4);
        const std::size_t k = q % 3 == 0 ? 1 : 20;
        CHECK(idx.knn(query, k) == oracle::knn(pts, query, k));
      }
    }
  }

  TEST_CASE("nearest_within respects the cap inclusively") {
    std::vector<Vec3> pts = {{0, 0, 0}, {2, 0, 0}};
    SpatialIndex idx(pts);
    Neighbor n;
    CHECK(idx.nearest_within({1, 0, 0}, 1.0, n));
    CHECK(n.index == 0);
    CHECK_FALSE(idx.nearest_within({1, 0, 0}, 0.999, n));
    CHECK(idx.nearest_within({2, 0, 0}, 0.0, n));
    CHECK(n.index == 1);
  }

  TEST_CASE("bbox diagonal and select") {
    PointCloud c;
    c.push_back({{0, 0, 0}, {1, 1, 1}});
    c.push_back({{3, 4, 12}, {2, 2, 2}});
    CHECK(c.bbox_diagonal() == doctest::Approx(13.0));
    const std::size_t idx[] = {1, 0};
    const PointCloud s = c.select(idx);
    CHECK(s[0] == c[1]);
    CHECK(s[1] == c[0]);
    CHECK(PointCloud{}.bbox_diagonal() == 0.0);
  }
}

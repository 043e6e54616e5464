#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "splatprep/chroma_filter.hpp"
#include "splatprep/error.hpp"
#include "splatprep/ply.hpp"

using namespace splatprep;

namespace {

PointCloud sized_buckets(std::initializer_list<std::size_t> sizes) {
  PointCloud c;
  std::uint8_t color = 10;
  double x = 0;
  for (std::size_t s : sizes) {
    for (std::size_t i = 0; i < s; ++i) c.push_back({{x++, 0, 0}, {color, color, color}});
    color += 10;
  }
  return c;
}

std::map<ColorBucketKey, std::size_t> bucket_sizes(const PointCloud& c) {
  std::map<ColorBucketKey, std::size_t> m;
  for (const auto& p : c) ++m[bucket_key(p.color)];
  return m;
}

}  // namespace

TEST_SUITE("chroma_filter") {
  TEST_CASE("grid plus one far point: exactly the far point goes") {
    PointCloud c;
    for (int x = 0; x < 10; ++x)
      for (int y = 0; y < 10; ++y)
        for (int z = 0; z < 10; ++z) c.push_back({{double(x), double(y), double(z)}, {1, 2, 3}});
    c.push_back({{4.5 + 50.0, 4.5, 4.5}, {1, 2, 3}});
    OutlierStats stats;
    const PointCloud out = remove_outliers(c, {6, 2.0}, &stats);
    REQUIRE(out.size() == 1000);
    for (const auto& p : out) CHECK(p.position.x() < 10);
    const auto keep = oracle::outlier_keep(testutil::positions(c), 6, 2.0);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(keep[i] == (i < 1000));
    CHECK(stats.mean_distances.size() == c.size());
  }

  TEST_CASE("unreachable threshold returns the input; tiny clouds pass through") {
    std::mt19937_64 g(1);
    const PointCloud c = testutil::random_cloud(g, 500, 5);
    CHECK(remove_outliers(c, {20, 1e9}) == c);
    const PointCloud small = testutil::random_cloud(g, 10, 2);
    OutlierStats s;
    CHECK(remove_outliers(small, {20, 2.0}, &s) == small);
    CHECK(s.skipped);
    CHECK(remove_outliers(PointCloud{}, {20, 2.0}).empty());
  }

  TEST_CASE("classification matches the brute-force rule") {
    std::mt19937_64 g(2);
    for (int trial = 0; trial < 5; ++trial) {
      PointCloud c = testutil::random_cloud(g, 800 + 300 * trial, 20);
      std::uniform_real_distribution<double> far(20, 60);
      for (int i = 0; i < 15; ++i) c.push_back({{far(g), far(g), far(g)}, {0, 0, 0}});
      const auto keep = oracle::outlier_keep(testutil::positions(c), 20, 2.0);
      OutlierStats stats;
      const PointCloud out = remove_outliers(c, {}, &stats);
      const auto ref_d = oracle::mean_knn_distances(testutil::positions(c), 20);
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(stats.mean_distances[i] == doctest::Approx(ref_d[i]).epsilon(1e-12));
      std::vector<std::size_t> kept;
      for (std::size_t i = 0; i < c.size(); ++i)
        if (keep[i]) kept.push_back(i);
      CHECK(out == c.select(kept));
    }
  }

  TEST_CASE("bucketing is a partition by exact colour") {
    const PointCloud one = sized_buckets({40});
    CHECK(bucket_by_color(one).size() == 1);
    const PointCloud three = sized_buckets({50, 10, 5});
    const auto b = bucket_by_color(three);
    std::multiset<std::size_t> sizes;
    for (const auto& [k, v] : b) sizes.insert(v.size());
    CHECK(sizes == std::multiset<std::size_t>{5, 10, 50});

    std::mt19937_64 g(3);
    const PointCloud c = testutil::random_cloud(g, 3000, 200);
    std::vector<int> seen(c.size(), 0);
    for (const auto& [key, idx] : bucket_by_color(c)) {
      CHECK(std::is_sorted(idx.begin(), idx.end()));
      for (std::size_t i : idx) {
        ++seen[i];
        CHECK(bucket_key(c[i].color) == key);
      }
    }
    for (int s : seen) CHECK(s == 1);
  }

  TEST_CASE("quantisation merges nearby colours") {
    CHECK(bucket_key({17, 31, 255}, 16) == bucket_key({30, 16, 240}, 16));
    CHECK_FALSE(bucket_key({15, 31, 255}, 16) == bucket_key({16, 31, 255}, 16));
  }

  TEST_CASE("cap law on 50/10/5") {
    const PointCloud c = sized_buckets({50, 10, 5});
    ChromaParams p;
    p.max_points_per_color = 10;
    const PointCloud out = subsample_by_color(c, p);
    CHECK(out.size() == 25);
    std::multiset<std::size_t> sizes;
    for (const auto& [k, n] : bucket_sizes(out)) sizes.insert(n);
    CHECK(sizes == std::multiset<std::size_t>{5, 10, 10});
    p.max_points_per_color = 50;
    CHECK(subsample_by_color(c, p) == c);
  }

  TEST_CASE("subset, order, seed determinism and monotonicity") {
    std::mt19937_64 g(4);
    const PointCloud c = testutil::random_cloud(g, 5000, 120);
    ChromaParams p;
    p.rng_seed = 99;
    const PointCloud a = subsample_by_color(c, p);
    CHECK(subsample_by_color(c, p) == a);
    // Output keeps input order and is made of unmodified input points.
    std::size_t j = 0;
    for (const auto& pt : a) {
      while (j < c.size() && !(c[j] == pt)) ++j;
      REQUIRE(j < c.size());
      ++j;
    }
    p.rng_seed = 100;
    const PointCloud b = subsample_by_color(c, p);
    CHECK(bucket_sizes(a) == bucket_sizes(b));
    CHECK_FALSE(a == b);

    std::size_t prev = 0;
    for (std::size_t n : {1, 2, 5, 10, 20, 100}) {
      p.max_points_per_color = n;
      const std::size_t s = subsample_by_color(c, p).size();
      CHECK(s >= prev);
      prev = s;
    }
  }

  TEST_CASE("n = 1 keeps one point per distinct colour after outlier removal") {
    std::mt19937_64 g(5);
    const PointCloud c = testutil::random_cloud(g, 4000, 300);
    ChromaParams p;
    p.max_points_per_color = 1;
    ChromaStats stats;
    const PointCloud out = chroma_filter(c, {}, p, &stats);
    const PointCloud inliers = remove_outliers(c, {});
    std::set<std::uint32_t> colors;
    for (const auto& pt : inliers) colors.insert(bucket_key(pt.color).packed());
    CHECK(out.size() == colors.size());
    CHECK(stats.output_points == out.size());
    CHECK(stats.after_outliers == inliers.size());
    CHECK(stats.buckets == colors.size());
    CHECK(out == subsample_by_color(inliers, p));
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(validate(ChromaParams{0, 0, 1}), UsageError);
    CHECK_THROWS_AS(validate(ChromaParams{1, 0, 0}), UsageError);
    CHECK_THROWS_AS(validate(OutlierParams{0, 2.0}), UsageError);
    CHECK_THROWS_AS(validate(OutlierParams{20, -1.0}), UsageError);
    CHECK_NOTHROW(validate(ChromaParams{}));
  }
}

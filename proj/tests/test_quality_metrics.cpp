#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splatprep/error.hpp"
#include "splatprep/image_io.hpp"
#include "splatprep/quality_metrics.hpp"
#include "splatprep/report.hpp"

using namespace splatprep;

namespace {

Image constant(int w, int h, int ch, std::uint8_t v) { return Image(w, h, ch, v); }

Image offset(const Image& img, int delta) {
  Image out = img;
  for (auto& v : out.data()) v = static_cast<std::uint8_t>(std::clamp(int(v) + delta, 0, 255));
  return out;
}

}  // namespace

TEST_SUITE("quality_metrics") {
  TEST_CASE("l1 closed forms") {
    const Image a = constant(20, 20, 3, 100);
    CHECK(l1_loss({a, a}) == 0.0);
    CHECK(l1_loss({a, constant(20, 20, 3, 151)}) == doctest::Approx(0.2).epsilon(1e-15));
  }

  TEST_CASE("ssim closed forms") {
    std::mt19937_64 g(61);
    const Image r = testutil::random_image(g, 40, 30, 3);
    CHECK(std::abs(ssim({r, r}) - 1.0) < 1e-12);
    const double c1 = std::pow(0.01 * 255, 2);
    CHECK(ssim({constant(32, 32, 1, 0), constant(32, 32, 1, 255)}) == doctest::Approx(c1 / (255.0 * 255.0 + c1)).epsilon(1e-12));
    CHECK_THROWS_AS(ssim({constant(8, 8, 1, 0), constant(8, 8, 1, 0)}), UsageError);
  }

  TEST_CASE("psnr closed forms and sentinel") {
    const Image a = constant(16, 16, 3, 50);
    CHECK(is_identical_sentinel(psnr({a, a})));
    CHECK(psnr({a, constant(16, 16, 3, 66)}) == doctest::Approx(10 * std::log10(255.0 * 255.0 / 256.0)).epsilon(1e-14));
    CHECK(std::abs(psnr({a, constant(16, 16, 3, 66)}) - 24.04840) < 1e-5);
  }

  TEST_CASE("combined loss") {
    std::mt19937_64 g(62);
    const Image a = testutil::random_image(g, 32, 32, 3);
    const Image b = offset(a, 9);
    CHECK(combined_loss({a, a}) == 0.0);
    CHECK(combined_loss({a, b}, 0.0) == l1_loss({a, b}));
    CHECK(combined_loss({a, b}, 1.0) == doctest::Approx(1.0 - ssim({a, b})).epsilon(1e-15));
    CHECK(combined_loss({a, b}) == doctest::Approx(0.8 * l1_loss({a, b}) + 0.2 * (1 - ssim({a, b}))));
  }

  TEST_CASE("oracle equivalence on random pairs") {
    std::mt19937_64 g(63);
    for (int i = 0; i < 12; ++i) {
      const int ch = i % 2 ? 3 : 1;
      const Image a = testutil::random_image(g, 64, 64, ch);
      const Image b = i % 3 ? testutil::random_image(g, 64, 64, ch) : offset(a, int(g() % 40) - 20);
      const ImagePair p(a, b);
      CHECK(std::abs(psnr(p) - oracle::psnr(a, b)) < 1e-9);
      CHECK(std::abs(ssim(p) - oracle::ssim(a, b)) < 1e-9);
      CHECK(std::abs(l1_loss(p) - oracle::l1(a, b)) < 1e-12);
      CHECK(std::abs(mse(p) - oracle::mse(a, b)) < 1e-9);
    }
  }

  TEST_CASE("symmetry and range") {
    std::mt19937_64 g(64);
    for (int i = 0; i < 10; ++i) {
      const Image a = testutil::random_image(g, 30, 24, 3);
      const Image b = testutil::random_image(g, 30, 24, 3);
      CHECK(std::abs(ssim({a, b}) - ssim({b, a})) < 1e-14);
      CHECK(psnr({a, b}) == psnr({b, a}));
      const double s = ssim({a, b});
      CHECK(s >= -1.0);
      CHECK(s < 1.0);
      CHECK(combined_loss({a, b}) > 0.0);
    }
    // Anti-correlated images push SSIM negative.
    Image a(24, 24, 1), b(24, 24, 1);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        a.at(x, y) = (x + y) % 2 ? 255 : 0;
        b.at(x, y) = 255 - a.at(x, y);
      }
    CHECK(ssim({a, b}) < 0.0);
    CHECK(ssim({a, b}) >= -1.0);
  }

  TEST_CASE("pairs must share geometry; params are validated") {
    CHECK_THROWS_AS(ImagePair(constant(4, 4, 1, 0), constant(4, 5, 1, 0)), UsageError);
    CHECK_THROWS_AS(ImagePair(constant(4, 4, 1, 0), constant(4, 4, 3, 0)), UsageError);
    SsimParams even;
    even.window = 10;
    CHECK_THROWS_AS(validate(even), UsageError);
  }

  TEST_CASE("report arithmetic re-derives from records") {
    std::vector<MetricsRecord> recs;
    std::mt19937_64 g(65);
    std::uniform_real_distribution<double> u(0, 1);
    for (const char* row : {"a", "b", "c"})
      for (const char* col : {"base", "x", "y"}) recs.push_back({"", row, col, 30 + u(g), 0.9 + 0.05 * u(g), 0.02 * u(g)});
    const QualityReport q = build_report(recs, "base");
    REQUIRE(q.columns == std::vector<std::string>{"base", "x", "y"});
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0;
      for (const auto& r : recs)
        if (r.density == q.columns[c]) s += r.psnr;
      CHECK(q.psnr.average[c] == doctest::Approx(s / 3).epsilon(1e-15));
      CHECK(q.psnr.increase[c] == doctest::Approx(q.psnr.average[c] - q.psnr.average[0]).epsilon(1e-15));
      CHECK(q.psnr.percent_increase[c] == doctest::Approx(100 * q.psnr.increase[c] / q.psnr.average[0]).epsilon(1e-15));
    }
    for (const char* row : {"a", "b", "c"}) {
      const auto& cells = q.loss.cells.at(row);
      std::vector<std::pair<double, std::string>> v;
      for (const auto& [col, val] : cells) v.emplace_back(val, col);
      std::sort(v.begin(), v.end());
      CHECK(q.loss.best.at(row) == v[0].second);
      CHECK(q.loss.second_best.at(row) == v[1].second);
    }
    CHECK_THROWS_AS(build_report(recs, "missing"), UsageError);
  }

  TEST_CASE("single column against itself") {
    std::vector<MetricsRecord> recs = {{"", "1", "only", 30, 0.9, 0.01}, {"", "2", "only", 32, 0.92, 0.02}};
    const QualityReport q = build_report(recs, "only");
    CHECK(q.psnr.increase[0] == 0.0);
    CHECK(q.psnr.percent_increase[0] == 0.0);
    CHECK(q.ssim.percent_increase[0] == 0.0);
  }

  TEST_CASE("identical-image PSNR is excluded from averages with a warning") {
    std::vector<MetricsRecord> recs = {{"", "1", "v", std::numeric_limits<double>::infinity(), 1, 0},
                                       {"", "2", "v", 30, 0.9, 0.01},
                                       {"", "3", "v", 34, 0.9, 0.01}};
    const QualityReport q = build_report(recs, "v");
    CHECK(q.psnr.average[0] == 32.0);
    CHECK(q.psnr.count[0] == 2);
    CHECK(!q.warnings.empty());
    const auto j = to_json(q);
    CHECK(j["tables"]["psnr"]["average"]["v"] == 32.0);
    CHECK(to_json(recs[0])["psnr"] == "inf");
    CHECK(std::isinf(record_from_json(to_json(recs[0])).psnr));
    CHECK(to_csv(q).find("psnr,average,v,32") != std::string::npos);
  }

  TEST_CASE("directory evaluation") {
    testutil::TempDir dir("eval");
    std::filesystem::create_directories(dir / "obs");
    std::filesystem::create_directories(dir / "ren");
    std::filesystem::create_directories(dir / "same");
    int deltas[10];
    for (int i = 0; i < 10; ++i) {
      deltas[i] = 3 + 5 * i;
      const std::string name = "img" + std::to_string(i) + ".png";
      const Image base = constant(24, 20, 3, 100);
      save_image(base, dir / "obs" / name);
      save_image(base, dir / "same" / name);
      save_image(offset(base, deltas[i]), dir / "ren" / name);
    }
    save_image(constant(24, 20, 3, 0), dir / "obs" / "extra.png");

    const EvalResult same = evaluate_dir(dir / "obs", dir / "same", {});
    CHECK(same.records.size() == 10);
    CHECK(same.unmatched == std::vector<std::string>{"extra.png"});
    for (const auto& r : same.records) {
      CHECK(is_identical_sentinel(r.psnr));
      CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(r.loss == doctest::Approx(0.0).scale(1e-12));
    }

    const EvalResult diff = evaluate_dir(dir / "obs", dir / "ren", {});
    REQUIRE(diff.records.size() == 10);
    const double c1 = std::pow(0.01 * 255, 2);
    for (const auto& r : diff.records) {
      const int i = std::stoi(r.label.substr(3));
      const double d = deltas[i];
      CHECK(r.psnr == doctest::Approx(10 * std::log10(255.0 * 255.0 / (d * d))).epsilon(1e-12));
      const double s = (2 * 100.0 * (100 + d) + c1) / (100.0 * 100 + (100 + d) * (100 + d) + c1);
      CHECK(r.ssim == doctest::Approx(s).epsilon(1e-12));
      CHECK(r.loss == doctest::Approx(0.8 * d / 255 + 0.2 * (1 - s)).epsilon(1e-12));
    }
  }
}

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "splatprep/error.hpp"
#include "splatprep/pipeline.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/synth.hpp"

using namespace splatprep;
namespace fs = std::filesystem;

namespace {

SynthParams small_scene() {
  SynthParams p;
  p.frames = 30;
  p.lidar_points = 4000;
  p.outliers = 40;
  p.sfm_points = 3000;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_field(const std::vector<ConfigProblem>& problems, const std::string& field) {
  for (const auto& p : problems)
    if (p.field == field) return true;
  return false;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SPLATPREP_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_SUITE("pipeline_cli") {
  TEST_CASE("config validation") {
    testutil::TempDir dir("cfg");
    generate_scene(dir.path, small_scene());
    const fs::path cfg = dir / "config.json";
    CHECK(validate_config(cfg).empty());
    CHECK(has_field(validate_config(cfg, {"frames.overlap=120"}), "frames.overlap"));
    CHECK(has_field(validate_config(cfg, {"frames.overlap=0"}), "frames.overlap"));
    CHECK(has_field(validate_config(cfg, {"chroma.max_points_per_color=0"}), "chroma.max_points_per_color"));
    CHECK(has_field(validate_config(cfg, {"inputs.lidar=nope.ply"}), "inputs.lidar"));
    CHECK(has_field(validate_config(cfg, {"frames.bogus=1"}), "frames.bogus"));
    CHECK(has_field(validate_config(cfg, {"ply.format=text"}), "ply.format"));
    CHECK_THROWS_AS(load_config(cfg, {"frames.overlap=120"}), UsageError);

    const PipelineConfig c = load_config(cfg, {"frames.overlap=70", "seed=5"});
    CHECK(c.sampler.target_overlap == 70.0);
    CHECK(c.seed == 5);
    CHECK(c.lidar == fs::absolute(dir / "lidar.ply"));
    CHECK(c.chroma.max_points_per_color == 10);

    std::ofstream(dir / "bad.json") << "{\n  \"seed\": 1,\n  \"output\" \"x\"\n}\n";
    try {
      validate_config(dir / "bad.json");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("run matches the synthetic truth and is deterministic") {
    testutil::TempDir dir("run");
    const SynthTruth truth = generate_scene(dir.path, small_scene());
    const PipelineConfig c = load_config(dir / "config.json");
    const RunManifest m = run(c);

    const nlohmann::json report = nlohmann::json::parse(slurp(dir / "out" / "frames_report.json"));
    std::vector<std::size_t> selected;
    for (const auto& e : report["selected"]) selected.push_back(e["index"]);
    CHECK(selected == truth.expected_selected);
    CHECK(m.images_sampled == truth.expected_selected.size());
    std::size_t on_disk = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "out" / "images")) ++on_disk;
    CHECK(on_disk == m.images_sampled);

    CHECK(m.lidar_before == truth.lidar_points);
    CHECK(m.sfm_points == truth.sfm_points);
    CHECK(m.fused_points == m.sfm_points + m.lidar_after);
    const PointCloud fused = load_ply(dir / "out" / "fused.ply");
    CHECK(fused.size() == m.fused_points);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(m.hashes.at("fused.ply") == sha256_file(dir / "out" / "fused.ply"));

    // Recovered alignment puts the LiDAR block near the truth transform.
    const PointCloud lidar = load_ply(dir / "out" / "lidar_filtered.ply");
    const nlohmann::json sidecar = nlohmann::json::parse(slurp(dir / "out" / "fused.ply.sources.json"));
    CHECK(sidecar["sources"][1]["count"] == lidar.size());
    const std::size_t first_lidar = sidecar["sources"][1]["first"];
    double worst = 0;
    for (std::size_t i = 0; i < lidar.size(); ++i)
      worst = std::max(worst, (fused[first_lidar + i].position - truth.lidar_to_sfm.apply(lidar[i].position)).norm());
    CHECK(worst < 0.02);

    const std::string first = slurp(dir / "out" / "fused.ply");
    const RunManifest again = run(c);
    CHECK(slurp(dir / "out" / "fused.ply") == first);
    CHECK(again.hashes == m.hashes);
  }

  TEST_CASE("missing SfM stops with an instruction") {
    testutil::TempDir dir("nosfm");
    generate_scene(dir.path, small_scene());
    const PipelineConfig c = load_config(dir / "config.json", {"inputs.sfm=null"});
    try {
      run(c);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "sfm");
      CHECK(std::string(e.what()).find("inputs.sfm") != std::string::npos);
    }
    CHECK(fs::exists(dir / "out" / "frames_report.json"));
    CHECK(!fs::exists(dir / "out" / "fused.ply"));
  }

  TEST_CASE("stages run standalone give the same bytes") {
    testutil::TempDir dir("iso");
    generate_scene(dir.path, small_scene());
    run(load_config(dir / "config.json"));
    const fs::path d = dir.path;

    REQUIRE(cli("chroma --in " + (d / "lidar.ply").string() + " --out " + (d / "c.ply").string() +
                " --n 10 --seed 42") == 0);
    CHECK(slurp(d / "c.ply") == slurp(d / "out" / "lidar_filtered.ply"));

    REQUIRE(cli("frames --in " + (d / "frames").string() + " --out " + (d / "fr").string() +
                " --overlap 80 --seed 42 --report " + (d / "fr.json").string()) == 0);
    CHECK(slurp(d / "fr.json") == slurp(d / "out" / "frames_report.json"));

    REQUIRE(cli("align --lidar " + (d / "c.ply").string() + " --sfm " + (d / "sfm.ply").string() + " --pairs " +
                (d / "pairs.txt").string() + " --seed 42 --out " + (d / "f.ply").string()) == 0);
    CHECK(slurp(d / "f.ply") == slurp(d / "out" / "fused.ply"));

    CHECK(cli("validate --config " + (d / "config.json").string()) == 0);
    CHECK(cli("validate --config " + (d / "config.json").string() + " --set frames.overlap=150") != 0);
    CHECK(cli("chroma --in " + (d / "missing.ply").string() + " --out x.ply") != 0);
  }
}

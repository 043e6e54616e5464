// splatprep: command-line front end for the preprocessing pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatprep/chroma_filter.hpp"
#include "splatprep/error.hpp"
#include "splatprep/frame_sampler.hpp"
#include "splatprep/image_io.hpp"
#include "splatprep/log.hpp"
#include "splatprep/pipeline.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/registration.hpp"
#include "splatprep/report.hpp"
#include "splatprep/synth.hpp"
#include "splatprep/undistort.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatprep;

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

PlyWriteOptions ply_options(bool ascii) { return {.format = ascii ? PlyFormat::ascii : PlyFormat::binary_le}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud and image preprocessing for Gaussian-splatting training"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // chroma
  std::string c_in, c_out;
  OutlierParams c_outlier;
  ChromaParams c_chroma;
  bool c_ascii = false;
  auto* chroma = app.add_subcommand("chroma", "statistical outlier removal + per-colour subsampling");
  chroma->add_option("--in", c_in, "input PLY")->required()->check(CLI::ExistingFile);
  chroma->add_option("--out", c_out, "output PLY")->required();
  chroma->add_option("--n", c_chroma.max_points_per_color, "points kept per colour")->capture_default_str();
  chroma->add_option("--knn", c_outlier.k, "neighbours for the outlier statistic")->capture_default_str();
  chroma->add_option("--alpha", c_outlier.alpha, "outlier threshold in standard deviations")->capture_default_str();
  chroma->add_option("--seed", c_chroma.rng_seed)->capture_default_str();
  chroma->add_option("--quantization", c_chroma.quantization, "channel divisor before bucketing")->capture_default_str();
  chroma->add_flag("--ascii", c_ascii, "write ASCII PLY");

  // frames
  std::string f_in, f_out, f_report;
  SamplerParams f_params;
  auto* frames = app.add_subcommand("frames", "select frames by overlap with the last kept frame");
  frames->add_option("--in", f_in, "directory of frames")->required()->check(CLI::ExistingDirectory);
  frames->add_option("--out", f_out, "directory for the selected frames")->required();
  frames->add_option("--overlap", f_params.target_overlap, "target overlap in percent")->capture_default_str();
  frames->add_option("--fast-t", f_params.fast.threshold, "FAST intensity threshold")->capture_default_str();
  frames->add_option("--max-features", f_params.fast.max_features)->capture_default_str();
  frames->add_option("--ransac-iters", f_params.ransac.iterations)->capture_default_str();
  frames->add_option("--ransac-threshold", f_params.ransac.inlier_threshold, "pixels")->capture_default_str();
  frames->add_option("--min-inliers", f_params.min_inliers)->capture_default_str();
  frames->add_option("--seed", f_params.ransac.seed)->capture_default_str();
  frames->add_option("--report", f_report, "JSON log of every measured pair");

  // undistort
  std::string u_in, u_out, u_intr;
  auto* undist = app.add_subcommand("undistort", "remove lens distortion from an image or a directory");
  undist->add_option("--in", u_in, "image or directory")->required()->check(CLI::ExistingPath);
  undist->add_option("--out", u_out, "image or directory")->required();
  undist->add_option("--intrinsics", u_intr)->required()->check(CLI::ExistingFile);

  // align
  std::string a_lidar, a_sfm, a_pairs, a_out, a_report;
  IcpParams a_icp;
  bool a_ascii = false;
  auto* align = app.add_subcommand("align", "coarse similarity from picked pairs, ICP refinement, fusion");
  align->add_option("--lidar", a_lidar)->required()->check(CLI::ExistingFile);
  align->add_option("--sfm", a_sfm)->required()->check(CLI::ExistingFile);
  align->add_option("--pairs", a_pairs, "six numbers per line: lidar xyz, sfm xyz")->required()->check(CLI::ExistingFile);
  align->add_option("--out", a_out, "fused PLY")->required();
  align->add_option("--report", a_report, "ICP report JSON");
  align->add_option("--max-iterations", a_icp.max_iterations, "per phase")->capture_default_str();
  align->add_option("--epsilon", a_icp.epsilon)->capture_default_str();
  align->add_option("--seed", a_icp.seed)->capture_default_str();
  align->add_flag("--ascii", a_ascii, "write ASCII PLY");

  // eval
  std::string e_obs, e_ren, e_out;
  EvalParams e_params;
  auto* eval = app.add_subcommand("eval", "PSNR, SSIM and combined loss over matching file names");
  eval->add_option("--observed", e_obs)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--rendered", e_ren)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", e_out)->required();
  eval->add_option("--lambda", e_params.lambda)->capture_default_str();
  eval->add_option("--sh", e_params.sh_level, "row tag for the summary record");
  eval->add_option("--density", e_params.density, "column tag for the summary record");

  // report
  std::vector<std::string> r_records;
  std::string r_baseline = "vanilla", r_out, r_csv;
  auto* report = app.add_subcommand("report", "comparison tables against a baseline column");
  report->add_option("--records", r_records, "eval reports or record lists")->required()->check(CLI::ExistingFile);
  report->add_option("--baseline", r_baseline)->capture_default_str();
  report->add_option("--out", r_out)->required();
  report->add_option("--csv", r_csv, "also write long-form CSV");

  // run / validate
  std::string cfg_path;
  std::vector<std::string> overrides;
  auto* run_cmd = app.add_subcommand("run", "execute the whole pipeline from a config");
  run_cmd->add_option("--config", cfg_path)->required();
  run_cmd->add_option("--set", overrides, "key.path=value (repeatable)");
  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  validate_cmd->add_option("--config", cfg_path)->required();
  validate_cmd->add_option("--set", overrides, "key.path=value (repeatable)");

  // synth
  std::string s_out;
  SynthParams s_params;
  auto* synth = app.add_subcommand("synth", "generate a synthetic mini-scene");
  synth->add_option("--out", s_out)->required();
  synth->add_option("--frames", s_params.frames)->capture_default_str();
  synth->add_option("--width", s_params.width)->capture_default_str();
  synth->add_option("--height", s_params.height)->capture_default_str();
  synth->add_option("--step", s_params.step_px, "pan per frame in pixels")->capture_default_str();
  synth->add_option("--lidar-points", s_params.lidar_points)->capture_default_str();
  synth->add_option("--sfm-points", s_params.sfm_points)->capture_default_str();
  synth->add_option("--seed", s_params.seed)->capture_default_str();
  synth->add_flag("--distort", s_params.distort, "render through a lens model");

  CLI11_PARSE(app, argc, argv);

  std::string tag = app.get_subcommands().front()->get_name();
  try {
    if (*chroma) {
      validate(c_outlier);
      validate(c_chroma);
      const PointCloud in = load_ply(c_in, SourceTag::lidar);
      ChromaStats stats;
      const PointCloud out = chroma_filter(in, c_outlier, c_chroma, &stats);
      save_ply(out, c_out, ply_options(c_ascii));
      std::printf("%zu -> %zu after outliers -> %zu points (%zu colours)\n", stats.input_points, stats.after_outliers,
                  stats.output_points, stats.buckets);
    } else if (*frames) {
      tag = "frames";
      const auto files = list_images(f_in);
      if (files.empty()) throw UsageError("no images in '" + f_in + "'");
      const FrameSelection sel =
          select_frames(files.size(), [&](std::size_t i) { return to_gray(load_image(files[i])); }, f_params);
      fs::create_directories(f_out);
      for (std::size_t i : sel.selected)
        fs::copy_file(files[i], fs::path(f_out) / files[i].filename(), fs::copy_options::overwrite_existing);
      if (!f_report.empty()) write_json(f_report, to_json(sel, files));
      std::printf("selected %zu of %zu frames (%zu skipped)\n", sel.selected.size(), files.size(), sel.skipped.size());
    } else if (*undist) {
      const DistortionModel model = load_intrinsics(u_intr);
      if (fs::is_directory(u_in)) {
        fs::create_directories(u_out);
        const auto files = list_images(u_in);
        for (const auto& f : files) save_image(undistort_image(model, load_image(f)), fs::path(u_out) / f.filename());
        std::printf("undistorted %zu images\n", files.size());
      } else {
        save_image(undistort_image(model, load_image(u_in)), u_out);
      }
    } else if (*align) {
      validate(a_icp);
      const PointCloud lidar = load_ply(a_lidar, SourceTag::lidar);
      const PointCloud sfm = load_ply(a_sfm, SourceTag::sfm);
      const PickedPairs pairs = load_pairs(a_pairs);
      const SimilarityTransform init = estimate_similarity(pairs.lidar, pairs.sfm);
      const IcpResult r = icp(lidar, sfm, init, a_icp);
      const FuseSummary s = fuse(sfm, apply(r.full, lidar), a_out, ply_options(a_ascii));
      if (!a_report.empty()) write_json(a_report, to_json(r));
      std::printf("fused %zu points (sfm %zu + lidar %zu), rms %.6g, matched %.4f\n", s.total_points, s.sfm_points,
                  s.lidar_points, r.report.final_rms, r.report.final_matched_fraction);
    } else if (*eval) {
      const EvalResult r = evaluate_dir(e_obs, e_ren, e_params);
      write_json(e_out, to_json(r));
      std::printf("%zu pairs: psnr %.4f ssim %.6f loss %.6f\n", r.records.size(), r.summary.psnr, r.summary.ssim,
                  r.summary.loss);
    } else if (*report) {
      std::vector<MetricsRecord> records;
      for (const auto& f : r_records) {
        auto more = load_records(f);
        records.insert(records.end(), more.begin(), more.end());
      }
      const QualityReport q = build_report(records, r_baseline);
      write_json(r_out, to_json(q));
      if (!r_csv.empty()) {
        std::ofstream csv(r_csv);
        if (!csv) throw IoError("cannot write '" + r_csv + "'");
        csv << to_csv(q);
      }
    } else if (*run_cmd) {
      tag = "config";
      const PipelineConfig cfg = load_config(cfg_path, overrides);
      tag = "run";
      const RunManifest m = run(cfg);
      std::printf("%zu images, lidar %zu -> %zu, fused %zu points; manifest in %s\n", m.images_sampled, m.lidar_before,
                  m.lidar_after, m.fused_points, (cfg.output / "manifest.json").string().c_str());
    } else if (*validate_cmd) {
      const auto problems = validate_config(cfg_path, overrides);
      for (const auto& p : problems) std::printf("%s: %s\n", p.field.c_str(), p.message.c_str());
      if (!problems.empty()) return 1;
      std::printf("ok\n");
    } else if (*synth) {
      const SynthTruth t = generate_scene(s_out, s_params);
      std::printf("wrote %zu frames, %zu lidar and %zu sfm points to %s\n", t.frames, t.lidar_points, t.sfm_points,
                  s_out.c_str());
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "splatprep: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "splatprep: [%s] %s\n", tag.c_str(), e.what());
    return 2;
  }
  return 0;
}

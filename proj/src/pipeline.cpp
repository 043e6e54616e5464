#include "splatprep/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "splatprep/image_io.hpp"
#include "splatprep/log.hpp"
#include "splatprep/transforms.hpp"
#include "splatprep/undistort.hpp"

namespace splatprep {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const json& defaults() {
  static const json d = {
      {"seed", 0},
      {"output", "out"},
      {"inputs", json::object()},
      {"undistort", {{"enabled", true}}},
      {"frames",
       {{"overlap", 80.0},
        {"fast_threshold", 20},
        {"max_features", 1000},
        {"ransac_iters", 2000},
        {"ransac_threshold", 3.0},
        {"min_inliers", 12},
        {"ratio", 0.0},
        {"binarize", "otsu"}}},
      {"outliers", {{"k", 20}, {"alpha", 2.0}}},
      {"chroma", {{"max_points_per_color", 10}, {"quantization", 1}}},
      {"icp",
       {{"max_iterations", 50},
        {"phase1_fraction", 0.90},
        {"phase2_fraction", 0.99},
        {"phase1_cap_ratio", 0.05},
        {"phase2_cap_ratio", 0.01},
        {"epsilon", 1e-8},
        {"max_source_points", 100000}}},
      {"ssim", {{"window", 11}, {"sigma", 1.5}}},
      {"ply", {{"format", "binary"}}},
  };
  return d;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"inputs", {"lidar", "frames", "pairs", "intrinsics", "sfm"}},
      {"undistort", {"enabled"}},
      {"frames",
       {"overlap", "resize", "fast_threshold", "max_features", "ransac_iters", "ransac_threshold", "min_inliers",
        "ratio", "binarize"}},
      {"outliers", {"k", "alpha"}},
      {"chroma", {"max_points_per_color", "quantization"}},
      {"icp",
       {"max_iterations", "phase1_fraction", "phase2_fraction", "phase1_cap_ratio", "phase2_cap_ratio",
        "phase1_cap", "phase2_cap", "epsilon", "max_source_points"}},
      {"ssim", {"window", "sigma"}},
      {"ply", {"format"}},
  };
  return k;
}

json parse_config_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    const std::size_t bol = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t col = upto - (bol == std::string::npos ? 0 : bol + 1) + 1;
    throw ParseError(path.string() + ": malformed config at column " + std::to_string(col), line);
  }
}

void apply_overrides(json& j, const ConfigOverrides& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    j[json::json_pointer(pointer)] = value;
  }
}

/// Missing keys take their defaults; objects merge recursively.
json with_defaults(const json& user) {
  json merged = defaults();
  merged.merge_patch(user);
  return merged;
}

class Checker {
 public:
  explicit Checker(std::vector<ConfigProblem>& problems) : problems_(problems) {}

  void add(std::string field, std::string message) { problems_.push_back({std::move(field), std::move(message)}); }

  std::optional<double> number(const json& j, const std::string& section, const std::string& key, double lo,
                               double hi, bool lo_open, bool hi_open, bool integer = false) {
    const std::string field = section + "." + key;
    if (!j.contains(section) || !j[section].contains(key)) return std::nullopt;
    const json& v = j[section][key];
    if (!v.is_number()) {
      add(field, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (integer && (!v.is_number_integer() && std::floor(x) != x)) {
      add(field, "expected an integer");
      return std::nullopt;
    }
    const bool below = lo_open ? !(x > lo) : !(x >= lo);
    const bool above = hi_open ? !(x < hi) : !(x <= hi);
    if (!std::isfinite(x) || below || above) {
      std::ostringstream m;
      m << "value " << x << " outside " << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
      add(field, m.str());
      return std::nullopt;
    }
    return x;
  }

  void path(const json& j, const std::string& key, const fs::path& base, bool required, bool directory) {
    const std::string field = "inputs." + key;
    if (!j["inputs"].contains(key) || j["inputs"][key].is_null()) {
      if (required) add(field, "required path is missing");
      return;
    }
    if (!j["inputs"][key].is_string()) {
      add(field, "expected a path string");
      return;
    }
    const fs::path p = base / j["inputs"][key].get<std::string>();
    std::error_code ec;
    if (!fs::exists(p, ec)) {
      add(field, "'" + p.string() + "' does not exist");
    } else if (directory != fs::is_directory(p, ec)) {
      add(field, "'" + p.string() + "' is not a " + std::string(directory ? "directory" : "regular file"));
    }
  }

 private:
  std::vector<ConfigProblem>& problems_;
};

std::vector<ConfigProblem> check(const json& j, const fs::path& base) {
  std::vector<ConfigProblem> problems;
  Checker c(problems);
  if (!j.is_object()) {
    c.add("", "config root must be an object");
    return problems;
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "seed" || key == "output") continue;
    auto it = known_keys().find(key);
    if (it == known_keys().end()) {
      c.add(key, "unknown key");
      continue;
    }
    if (!value.is_object()) {
      c.add(key, "expected an object");
      continue;
    }
    for (const auto& [sub, _] : value.items())
      if (!it->second.count(sub)) c.add(key + "." + sub, "unknown key");
  }
  if (!problems.empty()) return problems;

  if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
    c.add("seed", "expected a non-negative integer");
  if (!j["output"].is_string() || j["output"].get<std::string>().empty()) c.add("output", "expected a path string");

  c.path(j, "lidar", base, true, false);
  c.path(j, "frames", base, true, true);
  c.path(j, "pairs", base, true, false);
  c.path(j, "intrinsics", base, false, false);
  c.path(j, "sfm", base, false, false);

  if (!j["undistort"]["enabled"].is_boolean()) c.add("undistort.enabled", "expected true or false");

  c.number(j, "frames", "overlap", 0, 100, true, true);
  c.number(j, "frames", "fast_threshold", 1, 255, false, false, true);
  c.number(j, "frames", "max_features", 1, 1e7, false, false, true);
  c.number(j, "frames", "ransac_iters", 1, 1e8, false, false, true);
  c.number(j, "frames", "ransac_threshold", 0, 1e6, true, false);
  c.number(j, "frames", "min_inliers", 4, 1e7, false, false, true);
  c.number(j, "frames", "ratio", 0, 1, false, false);
  if (const json& b = j["frames"]["binarize"]; !(b == "otsu" || (b.is_number_integer() && b.get<int>() >= 0 && b.get<int>() <= 255)))
    c.add("frames.binarize", "expected \"otsu\" or a threshold in [0, 255]");
  if (j["frames"].contains("resize")) {
    const json& r = j["frames"]["resize"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer() || r[0].get<int>() <= 0 ||
        r[1].get<int>() <= 0)
      c.add("frames.resize", "expected [width, height] with positive integers");
  }

  c.number(j, "outliers", "k", 1, 1e6, false, false, true);
  c.number(j, "outliers", "alpha", 0, 1e6, false, false);
  c.number(j, "chroma", "max_points_per_color", 1, 1e12, false, false, true);
  c.number(j, "chroma", "quantization", 1, 255, false, false, true);

  c.number(j, "icp", "max_iterations", 1, 1e6, false, false, true);
  c.number(j, "icp", "phase1_fraction", 0, 1, true, false);
  c.number(j, "icp", "phase2_fraction", 0, 1, true, false);
  c.number(j, "icp", "phase1_cap_ratio", 0, 1e6, true, false);
  c.number(j, "icp", "phase2_cap_ratio", 0, 1e6, true, false);
  c.number(j, "icp", "phase1_cap", 0, 1e12, true, false);
  c.number(j, "icp", "phase2_cap", 0, 1e12, true, false);
  c.number(j, "icp", "epsilon", 0, 1, false, true);
  c.number(j, "icp", "max_source_points", 1, 1e12, false, false, true);

  if (auto w = c.number(j, "ssim", "window", 1, 1001, false, false, true); w && static_cast<int>(*w) % 2 == 0)
    c.add("ssim.window", "window size must be odd");
  c.number(j, "ssim", "sigma", 0, 1e6, true, false);

  if (!(j["ply"]["format"] == "binary" || j["ply"]["format"] == "ascii"))
    c.add("ply.format", "expected \"binary\" or \"ascii\"");
  return problems;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
auto stage(const std::string& name, F&& body) {
  log().info("stage {}", name);
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

json transform_json(const SimilarityTransform& t) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({t.rotation(i, 0), t.rotation(i, 1), t.rotation(i, 2)});
  return {{"scale", t.scale}, {"rotation", r}, {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

}  // namespace

SamplerParams sampler_params(const json& f, std::uint64_t seed) {
  SamplerParams p;
  p.target_overlap = f.value("overlap", p.target_overlap);
  p.fast.threshold = f.value("fast_threshold", p.fast.threshold);
  p.fast.max_features = f.value("max_features", p.fast.max_features);
  p.ransac.iterations = f.value("ransac_iters", p.ransac.iterations);
  p.ransac.inlier_threshold = f.value("ransac_threshold", p.ransac.inlier_threshold);
  p.ransac.seed = seed;
  p.min_inliers = f.value("min_inliers", p.min_inliers);
  p.matching.ratio = f.value("ratio", p.matching.ratio);
  if (f.contains("binarize") && f["binarize"].is_number()) p.binarize = BinarizeMode::fixed(f["binarize"].get<int>());
  return p;
}

std::vector<ConfigProblem> validate_config(const fs::path& path, const ConfigOverrides& overrides) {
  json j = parse_config_text(path);
  apply_overrides(j, overrides);
  return check(with_defaults(j), path.parent_path());
}

PipelineConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  json user = parse_config_text(path);
  apply_overrides(user, overrides);
  const json j = with_defaults(user);
  const fs::path base = path.parent_path();
  const auto problems = check(j, base);
  if (!problems.empty()) {
    std::string msg = "invalid config '" + path.string() + "':";
    for (const auto& p : problems) msg += "\n  " + p.field + ": " + p.message;
    throw UsageError(msg);
  }

  PipelineConfig c;
  auto resolve = [&](const std::string& key) { return fs::absolute(base / j["inputs"][key].get<std::string>()).lexically_normal(); };
  c.lidar = resolve("lidar");
  c.frames = resolve("frames");
  c.pairs = resolve("pairs");
  if (j["inputs"].contains("intrinsics") && !j["inputs"]["intrinsics"].is_null()) c.intrinsics = resolve("intrinsics");
  if (j["inputs"].contains("sfm") && !j["inputs"]["sfm"].is_null()) c.sfm = resolve("sfm");
  c.output = fs::absolute(base / j["output"].get<std::string>()).lexically_normal();
  c.seed = j["seed"].get<std::uint64_t>();

  c.undistort = j["undistort"]["enabled"].get<bool>();
  if (j["frames"].contains("resize")) c.resize = std::pair{j["frames"]["resize"][0].get<int>(), j["frames"]["resize"][1].get<int>()};
  c.sampler = sampler_params(j["frames"], c.seed);

  c.outliers.k = j["outliers"]["k"].get<std::size_t>();
  c.outliers.alpha = j["outliers"]["alpha"].get<double>();
  c.chroma.max_points_per_color = j["chroma"]["max_points_per_color"].get<std::size_t>();
  c.chroma.quantization = j["chroma"]["quantization"].get<int>();
  c.chroma.rng_seed = c.seed;

  const json& icp = j["icp"];
  c.icp.max_iterations = icp["max_iterations"].get<int>();
  c.icp.phase1_fraction = icp["phase1_fraction"].get<double>();
  c.icp.phase2_fraction = icp["phase2_fraction"].get<double>();
  c.icp.phase1_cap_ratio = icp["phase1_cap_ratio"].get<double>();
  c.icp.phase2_cap_ratio = icp["phase2_cap_ratio"].get<double>();
  if (icp.contains("phase1_cap")) c.icp.phase1_cap = icp["phase1_cap"].get<double>();
  if (icp.contains("phase2_cap")) c.icp.phase2_cap = icp["phase2_cap"].get<double>();
  c.icp.epsilon = icp["epsilon"].get<double>();
  c.icp.max_source_points = icp["max_source_points"].get<std::size_t>();
  c.icp.seed = c.seed;

  c.ssim.window = j["ssim"]["window"].get<int>();
  c.ssim.sigma = j["ssim"]["sigma"].get<double>();
  c.ply_format = j["ply"]["format"] == "ascii" ? PlyFormat::ascii : PlyFormat::binary_le;

  c.snapshot = j;
  c.snapshot["inputs"]["lidar"] = c.lidar.string();
  c.snapshot["inputs"]["frames"] = c.frames.string();
  c.snapshot["inputs"]["pairs"] = c.pairs.string();
  if (c.intrinsics) c.snapshot["inputs"]["intrinsics"] = c.intrinsics->string();
  if (c.sfm) c.snapshot["inputs"]["sfm"] = c.sfm->string();
  c.snapshot["output"] = c.output.string();

  validate(c.outliers);
  validate(c.chroma);
  validate(c.icp);
  validate(c.ssim);
  return c;
}

json to_json(const IcpResult& r) {
  json j;
  for (int p = 0; p < 2; ++p) {
    j["phases"].push_back({{"iterations", r.report.phase_iterations[p]},
                           {"target_reached", r.report.phase_target_reached[p]},
                           {"cap", r.report.phase_caps[p]}});
  }
  j["final_rms"] = r.report.final_rms;
  j["final_matched_fraction"] = r.report.final_matched_fraction;
  j["history"] = json::array();
  for (const IcpIteration& it : r.report.history)
    j["history"].push_back({{"phase", it.phase},
                            {"pairs", it.pairs},
                            {"matched_fraction", it.matched_fraction},
                            {"rms_before", it.rms_before},
                            {"rms_after", it.rms_after}});
  j["transform"] = transform_json(r.full);
  return j;
}

json to_json(const FrameSelection& s, const std::vector<fs::path>& frames) {
  auto name = [&](std::size_t i) { return i < frames.size() ? frames[i].filename().string() : std::to_string(i); };
  json j;
  j["frame_count"] = frames.size();
  j["selected"] = json::array();
  for (std::size_t i : s.selected) j["selected"].push_back({{"index", i}, {"name", name(i)}});
  j["skipped"] = json::array();
  for (std::size_t i : s.skipped) j["skipped"].push_back({{"index", i}, {"name", name(i)}});
  j["pairs"] = json::array();
  for (const PairLogEntry& e : s.pairs) {
    json p{{"anchor", e.anchor}, {"candidate", e.candidate}, {"matches", e.result.matches}, {"inliers", e.result.inliers}};
    p["overlap"] = e.result.overlap ? json(*e.result.overlap) : json(nullptr);
    if (!e.result.failure.empty()) p["failure"] = e.result.failure;
    j["pairs"].push_back(p);
  }
  return j;
}

json RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["config"] = config;
  j["counts"] = {{"images_sampled", images_sampled},
                 {"lidar_before_filter", lidar_before},
                 {"lidar_after_filter", lidar_after},
                 {"sfm_points", sfm_points},
                 {"fused_points", fused_points}};
  j["stages"] = json::array();
  for (const StageRecord& s : stages) j["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}, {"counts", s.counts}});
  j["hashes"] = hashes;
  return j;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

RunManifest run(const PipelineConfig& config) {
  RunManifest m;
  m.config = config.snapshot;
  const fs::path out = config.output;
  fs::create_directories(out);
  auto record = [&](std::string name, std::chrono::steady_clock::time_point t0, json counts) {
    m.stages.push_back({std::move(name), seconds_since(t0), std::move(counts)});
  };
  const PlyWriteOptions ply_opts{.format = config.ply_format};

  // Undistortion and resizing rewrite the frames; otherwise they are used in place.
  fs::path frames_dir = config.frames;
  std::optional<DistortionModel> model;
  if (config.intrinsics && config.undistort) model = stage("undistort", [&] { return load_intrinsics(*config.intrinsics); });
  if ((model && !model->is_identity()) || config.resize) {
    const auto t0 = std::chrono::steady_clock::now();
    frames_dir = out / "undistorted";
    const std::size_t n = stage("undistort", [&] {
      fs::remove_all(frames_dir);
      fs::create_directories(frames_dir);
      const auto files = list_images(config.frames);
      const auto count = static_cast<std::ptrdiff_t>(files.size());
      std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
          Image img = load_image(files[i]);
          if (model && !model->is_identity()) img = undistort_image(*model, img);
          if (config.resize) img = resize_bilinear(img, config.resize->first, config.resize->second);
          save_image(img, frames_dir / (files[i].stem().string() + ".png"));
        } catch (const std::exception& e) {
          errors[i] = files[i].filename().string() + ": " + e.what();
        }
      }
      for (const auto& e : errors)
        if (!e.empty()) throw Error(e);
      return files.size();
    });
    record("undistort", t0, {{"frames", n}, {"distortion", model && !model->is_identity()}, {"resized", config.resize.has_value()}});
  }

  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& [files, selection] = stage("frames", [&] {
      auto files = list_images(frames_dir);
      if (files.empty()) throw UsageError("no images in '" + frames_dir.string() + "'");
      FrameSelection sel = select_frames(files.size(), [&](std::size_t i) { return to_gray(load_image(files[i])); },
                                         config.sampler);
      const fs::path images = out / "images";
      fs::remove_all(images);
      fs::create_directories(images);
      for (std::size_t i : sel.selected) fs::copy_file(files[i], images / files[i].filename());
      std::ofstream(out / "frames_report.json") << to_json(sel, files).dump(2) << '\n';
      return std::pair{std::move(files), std::move(sel)};
    });
    m.images_sampled = selection.selected.size();
    record("frames", t0, {{"input", files.size()}, {"selected", selection.selected.size()}, {"skipped", selection.skipped.size()}});
  }

  // External boundary: the SfM reconstruction is produced outside this tool.
  const PointCloud sfm = stage("sfm", [&] {
    if (!config.sfm)
      throw Error("no SfM point cloud configured. Run an SfM tool (e.g. COLMAP) on '" + (out / "images").string() +
                  "', export the sparse model as PLY and set inputs.sfm to it, then re-run");
    if (!fs::exists(*config.sfm)) throw IoError("SfM point cloud '" + config.sfm->string() + "' not found");
    return load_ply(*config.sfm, SourceTag::sfm);
  });
  m.sfm_points = sfm.size();

  PointCloud filtered;
  {
    const auto t0 = std::chrono::steady_clock::now();
    ChromaStats stats;
    filtered = stage("chroma", [&] {
      PointCloud lidar = load_ply(config.lidar, SourceTag::lidar);
      PointCloud f = chroma_filter(lidar, config.outliers, config.chroma, &stats);
      save_ply(f, out / "lidar_filtered.ply", ply_opts);
      return f;
    });
    m.lidar_before = stats.input_points;
    m.lidar_after = stats.output_points;
    record("chroma", t0, {{"input", stats.input_points},
                          {"after_outliers", stats.after_outliers},
                          {"output", stats.output_points},
                          {"buckets", stats.buckets}});
  }

  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [aligned, icp_json] = stage("align", [&] {
      const PickedPairs pairs = load_pairs(config.pairs);
      const SimilarityTransform init = estimate_similarity(pairs.lidar, pairs.sfm);
      IcpResult r = icp(filtered, sfm, init, config.icp);
      return std::pair{apply(r.full, filtered), to_json(r)};
    });
    record("align", t0, icp_json);

    const auto t1 = std::chrono::steady_clock::now();
    const FuseSummary s = stage("fuse", [&] { return fuse(sfm, aligned, out / "fused.ply", ply_opts); });
    m.fused_points = s.total_points;
    record("fuse", t1, {{"sfm", s.sfm_points}, {"lidar", s.lidar_points}, {"total", s.total_points}});
  }

  stage("manifest", [&] {
    for (const char* f : {"fused.ply", "fused.ply.sources.json", "lidar_filtered.ply"}) m.hashes[f] = sha256_file(out / f);
    for (const auto& img : list_images(out / "images")) m.hashes["images/" + img.filename().string()] = sha256_file(img);
    std::ofstream mf(out / "manifest.json");
    if (!mf) throw IoError("cannot write manifest");
    mf << m.to_json().dump(2) << '\n';
    return 0;
  });
  return m;
}

}  // namespace splatprep

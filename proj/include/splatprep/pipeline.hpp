#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatprep/chroma_filter.hpp"
#include "splatprep/error.hpp"
#include "splatprep/frame_sampler.hpp"
#include "splatprep/ply.hpp"
#include "splatprep/quality_metrics.hpp"
#include "splatprep/registration.hpp"

namespace splatprep {

inline constexpr const char* kVersion = "0.3.0";

/// Failure inside one pipeline stage; what() is prefixed with "[stage] ".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::filesystem::path lidar;
  std::filesystem::path frames;
  std::optional<std::filesystem::path> intrinsics;
  std::filesystem::path pairs;
  std::optional<std::filesystem::path> sfm;  ///< external SfM output
  std::filesystem::path output;
  std::uint64_t seed = 0;

  bool undistort = true;  ///< only acts when intrinsics are given
  std::optional<std::pair<int, int>> resize;

  SamplerParams sampler{};
  OutlierParams outliers{};
  ChromaParams chroma{};
  IcpParams icp{};
  SsimParams ssim{};
  PlyFormat ply_format = PlyFormat::binary_le;

  nlohmann::json snapshot;  ///< config as resolved (paths absolute)
};

struct ConfigProblem {
  std::string field;  ///< dotted key, e.g. "frames.overlap"
  std::string message;
};

/// "a.b=value" assignments; value is parsed as JSON when it parses,
/// otherwise taken as a string.
using ConfigOverrides = std::vector<std::string>;

/// Parses the file (ParseError with line and column on malformed JSON),
/// applies overrides and checks every field. Relative paths resolve
/// against the config file's directory. Input files are only stat'ed.
std::vector<ConfigProblem> validate_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Throws UsageError listing every problem when validation fails.
PipelineConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

SamplerParams sampler_params(const nlohmann::json& frames_section, std::uint64_t seed);

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  nlohmann::json counts;
};

struct RunManifest {
  std::string version = kVersion;
  nlohmann::json config;
  std::vector<StageRecord> stages;
  std::map<std::string, std::string> hashes;  ///< output-relative path -> sha256 hex
  std::size_t images_sampled = 0;
  std::size_t lidar_before = 0;
  std::size_t lidar_after = 0;
  std::size_t sfm_points = 0;
  std::size_t fused_points = 0;

  nlohmann::json to_json() const;
};

/// undistort (optional) -> frame selection -> images/ -> SfM boundary ->
/// chroma filter -> coarse alignment from picked pairs + ICP -> fused.ply.
/// Writes manifest.json into the output directory. Outputs of finished
/// stages are kept when a later stage fails (StageError).
RunManifest run(const PipelineConfig& config);

nlohmann::json to_json(const IcpResult& result);
nlohmann::json to_json(const FrameSelection& selection, const std::vector<std::filesystem::path>& frames);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace splatprep
